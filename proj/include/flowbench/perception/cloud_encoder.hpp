#pragma once

#include <cstddef>
#include <vector>

#include "flowbench/numcore/mlp.hpp"
#include "flowbench/numcore/rng.hpp"
#include "flowbench/numcore/tensor.hpp"

namespace flowbench::perception {

using numcore::Rng;
using numcore::Tensor;

struct CloudEncoderConfig {
    std::size_t point_hidden = 64;
    std::size_t point_features = 128;
    std::size_t out_dim = 64;
};

// Per-point shared MLP, coordinatewise max-pool over the points of each
// frame, then a linear head. Max-pooling makes the embedding a function of
// the point multiset only.
struct CloudEncoder {
    numcore::MlpModel point_mlp;  // 3 -> point_hidden -> point_features, tanh
    numcore::DenseLayer head;     // point_features -> out_dim, identity

    static CloudEncoder make(const CloudEncoderConfig& cfg, Rng& rng);

    std::size_t out_dim() const { return head.out_dim(); }
    std::size_t feature_dim() const { return head.in_dim(); }
    std::vector<Tensor*> params();
    std::vector<const Tensor*> params() const;
};

struct EncoderCache {
    const CloudEncoder* owner = nullptr;
    std::size_t points_per_frame = 0;
    numcore::ActivationCache point_cache;  // all frames' points stacked
    std::vector<std::size_t> argmax;       // (frames * features) winning point row
    Tensor pooled;                         // (frames, features)
    Tensor head_post;                      // (frames, out_dim)
};

// points: (frames * points_per_frame, 3), frames inferred from the row
// count. Returns (frames, out_dim).
Tensor encode_batch(const CloudEncoder& enc, const Tensor& points,
                    std::size_t points_per_frame, EncoderCache* cache = nullptr);

// Single (m, 3) cloud -> (out_dim) embedding.
Tensor encode_cloud(const CloudEncoder& enc, const Tensor& cloud);

// dout: (frames, out_dim). Accumulates into `grads`, parallel to params().
void encoder_backward(const CloudEncoder& enc, const EncoderCache& cache, const Tensor& dout,
                      std::vector<Tensor>& grads);

}  // namespace flowbench::perception
