#pragma once

#include <vector>

#include "flowbench/flowmatch/field.hpp"
#include "flowbench/numcore/mlp.hpp"
#include "flowbench/numcore/rng.hpp"

namespace flowbench::flowmatch {

using numcore::DenseLayer;
using numcore::Rng;

struct MlpFieldConfig {
    std::size_t sample_dim = 2;
    std::size_t cond_dim = 0;                    // 0 = unconditional
    std::vector<std::size_t> hidden = {256, 256, 256};
    std::size_t time_dim = 8;                    // sinusoidal features, must be even

    std::size_t static_dim() const { return time_dim + cond_dim; }
};

struct FieldCache {
    const void* owner = nullptr;
    std::vector<Tensor> inputs;  // per-layer input [h | temb | cond]
    std::vector<Tensor> posts;   // per-layer post-activation
};

// Trainable velocity trunk. The time embedding and the condition vector are
// concatenated onto the input of every layer, so late layers see the
// condition directly.
class MlpVelocityField : public VelocityField {
public:
    MlpVelocityField() = default;
    static MlpVelocityField make(const MlpFieldConfig& cfg, Rng& rng);

    const MlpFieldConfig& config() const { return cfg_; }

    // times: (n), xs: (n, sample_dim), conds: (n, cond_dim) or empty tensor
    // when unconditional. Returns (n, sample_dim).
    Tensor forward_batch(const Tensor& times, const Tensor& xs, const Tensor& conds,
                         FieldCache* cache = nullptr) const;

    // dv: (n, sample_dim). Accumulates into `grads` (parallel to params());
    // when cond_grads is non-null it receives (n, cond_dim).
    void backward_batch(const FieldCache& cache, const Tensor& dv,
                        std::vector<Tensor>& grads, Tensor* cond_grads = nullptr) const;

    std::vector<Tensor*> params();
    std::vector<const Tensor*> params() const;
    void set_params(const std::vector<Tensor>& values);

    Tensor time_embedding(double t) const;

protected:
    Tensor do_eval(double t, const Tensor& x, const Tensor& cond) const override;

private:
    MlpFieldConfig cfg_;
    std::vector<DenseLayer> layers_;
};

}  // namespace flowbench::flowmatch
