#include "flowbench/flowmatch/mlp_field.hpp"

#include <cmath>
#include <numbers>

#include "flowbench/error.hpp"

namespace flowbench::flowmatch {

using numcore::Activation;
using numcore::dense_backward;
using numcore::dense_forward;
using numcore::make_dense;

MlpVelocityField MlpVelocityField::make(const MlpFieldConfig& cfg, Rng& rng) {
    if (cfg.sample_dim == 0) throw ConfigError("mlp field: sample_dim must be positive");
    if (cfg.time_dim == 0 || cfg.time_dim % 2 != 0)
        throw ConfigError("mlp field: time_dim must be even and positive");
    MlpVelocityField field;
    field.cfg_ = cfg;
    std::size_t width = cfg.sample_dim;
    for (std::size_t h : cfg.hidden) {
        if (h == 0) throw ConfigError("mlp field: hidden width must be positive");
        field.layers_.push_back(make_dense(width + cfg.static_dim(), h, Activation::tanh, rng));
        width = h;
    }
    // Zero-init output keeps the initial field identically zero, so early
    // f-map targets stay near the interpolant.
    field.layers_.push_back(
        make_dense(width + cfg.static_dim(), cfg.sample_dim, Activation::identity, rng, 0.0));
    return field;
}

Tensor MlpVelocityField::time_embedding(double t) const {
    Tensor out({cfg_.time_dim});
    double omega = std::numbers::pi;
    for (std::size_t j = 0; j < cfg_.time_dim / 2; ++j) {
        out[2 * j] = std::sin(omega * t);
        out[2 * j + 1] = std::cos(omega * t);
        omega *= 2.0;
    }
    return out;
}

Tensor MlpVelocityField::forward_batch(const Tensor& times, const Tensor& xs, const Tensor& conds,
                                       FieldCache* cache) const {
    if (times.ndim() != 1) throw DimensionError("mlp field: times must be 1-D");
    const std::size_t n = times.shape()[0];
    if (xs.ndim() != 2 || xs.rows() != n || xs.cols() != cfg_.sample_dim)
        throw DimensionError("mlp field: xs must be (n, sample_dim)");
    if (cfg_.cond_dim == 0) {
        if (!conds.empty()) throw DimensionError("mlp field: unconditional but conds given");
    } else if (conds.ndim() != 2 || conds.rows() != n || conds.cols() != cfg_.cond_dim) {
        throw DimensionError("mlp field: conds must be (n, cond_dim)");
    }

    Tensor statics({n, cfg_.static_dim()});
    for (std::size_t i = 0; i < n; ++i) {
        Tensor temb = time_embedding(times[i]);
        for (std::size_t j = 0; j < cfg_.time_dim; ++j) statics.at(i, j) = temb[j];
        for (std::size_t j = 0; j < cfg_.cond_dim; ++j)
            statics.at(i, cfg_.time_dim + j) = conds.at(i, j);
    }

    if (cache != nullptr) {
        cache->owner = this;
        cache->inputs.clear();
        cache->posts.clear();
        cache->inputs.reserve(layers_.size());
        cache->posts.reserve(layers_.size());
    }

    Tensor h = xs;
    for (const DenseLayer& layer : layers_) {
        Tensor in = numcore::concat_cols(h, statics);
        Tensor post;
        h = dense_forward(layer, in, cache != nullptr ? &post : nullptr);
        if (cache != nullptr) {
            cache->inputs.push_back(std::move(in));
            cache->posts.push_back(std::move(post));
        }
    }
    h.ensure_finite("mlp field output");
    return h;
}

void MlpVelocityField::backward_batch(const FieldCache& cache, const Tensor& dv,
                                      std::vector<Tensor>& grads, Tensor* cond_grads) const {
    if (cache.owner != this) throw ContractError("mlp field: cache belongs to another field");
    if (cache.inputs.size() != layers_.size())
        throw ContractError("mlp field: cache layer count mismatch");
    if (grads.size() != 2 * layers_.size())
        throw DimensionError("mlp field: grads must match params() layout");
    const std::size_t n = cache.inputs[0].rows();
    if (dv.ndim() != 2 || dv.rows() != n || dv.cols() != cfg_.sample_dim)
        throw DimensionError("mlp field: dv must be (n, sample_dim)");

    if (cond_grads != nullptr) *cond_grads = Tensor({n, cfg_.cond_dim});

    Tensor dy = dv;
    for (std::size_t li = layers_.size(); li-- > 0;) {
        Tensor din;
        dense_backward(layers_[li], cache.inputs[li], cache.posts[li], dy,
                       grads[2 * li], grads[2 * li + 1], &din);
        const std::size_t h_width = layers_[li].in_dim() - cfg_.static_dim();
        Tensor dh({n, h_width});
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < h_width; ++j) dh.at(i, j) = din.at(i, j);
            if (cond_grads != nullptr) {
                for (std::size_t j = 0; j < cfg_.cond_dim; ++j)
                    cond_grads->at(i, j) += din.at(i, h_width + cfg_.time_dim + j);
            }
        }
        dy = std::move(dh);
    }
}

std::vector<Tensor*> MlpVelocityField::params() {
    std::vector<Tensor*> out;
    out.reserve(2 * layers_.size());
    for (DenseLayer& layer : layers_) {
        out.push_back(&layer.w);
        out.push_back(&layer.b);
    }
    return out;
}

std::vector<const Tensor*> MlpVelocityField::params() const {
    std::vector<const Tensor*> out;
    out.reserve(2 * layers_.size());
    for (const DenseLayer& layer : layers_) {
        out.push_back(&layer.w);
        out.push_back(&layer.b);
    }
    return out;
}

void MlpVelocityField::set_params(const std::vector<Tensor>& values) {
    std::vector<Tensor*> dst = params();
    if (values.size() != dst.size()) throw DimensionError("mlp field: param count mismatch");
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!values[i].same_shape(*dst[i]))
            throw DimensionError("mlp field: param shape mismatch");
        *dst[i] = values[i];
    }
}

Tensor MlpVelocityField::do_eval(double t, const Tensor& x, const Tensor& cond) const {
    if (x.ndim() != 1 || x.shape()[0] != cfg_.sample_dim)
        throw DimensionError("mlp field: x must be 1-D of sample_dim");
    Tensor times({1});
    times[0] = t;
    Tensor xs({1, cfg_.sample_dim});
    for (std::size_t j = 0; j < cfg_.sample_dim; ++j) xs.at(0, j) = x[j];
    Tensor conds;
    if (cfg_.cond_dim > 0) {
        if (cond.ndim() != 1 || cond.shape()[0] != cfg_.cond_dim)
            throw DimensionError("mlp field: cond must be 1-D of cond_dim");
        conds = Tensor({1, cfg_.cond_dim});
        for (std::size_t j = 0; j < cfg_.cond_dim; ++j) conds.at(0, j) = cond[j];
    } else if (!cond.empty()) {
        throw DimensionError("mlp field: unconditional but cond given");
    }
    Tensor v = forward_batch(times, xs, conds);
    Tensor out({cfg_.sample_dim});
    for (std::size_t j = 0; j < cfg_.sample_dim; ++j) out[j] = v.at(0, j);
    return out;
}

}  // namespace flowbench::flowmatch
