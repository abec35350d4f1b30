#pragma once

#include <vector>

#include "flowbench/numcore/rng.hpp"
#include "flowbench/numcore/tensor.hpp"

namespace flowbench::numcore {

enum class Activation { identity, tanh };

// One affine layer. Weight is stored (in, out) so a batch X (n, in) maps to
// X * W + b.
struct DenseLayer {
    Tensor w;  // (in, out)
    Tensor b;  // (out)
    Activation act = Activation::identity;

    std::size_t in_dim() const { return w.rows(); }
    std::size_t out_dim() const { return w.cols(); }
};

DenseLayer make_dense(std::size_t in, std::size_t out, Activation act, Rng& rng,
                      double weight_scale = 1.0);

// Forward with post-activation cached for the backward pass.
Tensor dense_forward(const DenseLayer& layer, const Tensor& x, Tensor* post_out = nullptr);

// Given dL/dy, accumulates dL/dW and dL/db, optionally emits dL/dx.
// `x` and `post` must come from the matching dense_forward call.
void dense_backward(const DenseLayer& layer, const Tensor& x, const Tensor& post,
                    const Tensor& dy, Tensor& dw, Tensor& db, Tensor* dx = nullptr);

// Plain layer chain. Adjacent dims verified at construction, parameter
// shapes never change afterwards.
struct MlpModel {
    std::vector<DenseLayer> layers;

    std::size_t input_dim() const;
    std::size_t output_dim() const;
    std::vector<Tensor*> params();
    std::vector<const Tensor*> params() const;

    // dims = {in, h1, ..., out}; hidden layers get `hidden`, the last layer
    // `output`. `out_scale` rescales the last layer's init (0 = zero init).
    static MlpModel make(const std::vector<std::size_t>& dims, Activation hidden,
                         Activation output, Rng& rng, double out_scale = 1.0);
};

struct ActivationCache {
    const MlpModel* model = nullptr;
    Tensor input;               // (n, in)
    std::vector<Tensor> post;   // post-activation per layer, last = output
};

struct ParamGrads {
    std::vector<Tensor> grads;  // parallel to MlpModel::params() order (w0, b0, w1, b1, ...)
};

ParamGrads zero_grads_like(const std::vector<const Tensor*>& params);

// input: (n, in) or 1-D (in). Output has matching rank.
Tensor mlp_forward(const MlpModel& model, const Tensor& input, ActivationCache* cache = nullptr);

// output_grad shaped like the forward output. Throws ContractError when the
// cache does not belong to `model`.
ParamGrads mlp_backward(const MlpModel& model, const ActivationCache& cache,
                        const Tensor& output_grad, Tensor* input_grad = nullptr);

}  // namespace flowbench::numcore
