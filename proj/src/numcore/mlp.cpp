#include "flowbench/numcore/mlp.hpp"

#include <cmath>
#include <string>

namespace flowbench::numcore {

namespace {

Tensor as_matrix(const Tensor& t) {
    if (t.ndim() == 1) return Tensor({1, t.size()}, std::vector<double>(t.data(), t.data() + t.size()));
    if (t.ndim() == 2) return t;
    throw DimensionError("mlp: expected vector or matrix input");
}

void apply_activation(Activation act, Tensor& z) {
    if (act == Activation::tanh) {
        for (std::size_t i = 0; i < z.size(); ++i) z[i] = std::tanh(z[i]);
    }
}

}  // namespace

DenseLayer make_dense(std::size_t in, std::size_t out, Activation act, Rng& rng,
                      double weight_scale) {
    DenseLayer layer;
    // Xavier-uniform keeps tanh pre-activations in the linear-ish regime.
    const double s = weight_scale * std::sqrt(6.0 / static_cast<double>(in + out));
    layer.w = rng.uniform_tensor({in, out}, -s, s);
    layer.b = Tensor({out});
    layer.act = act;
    return layer;
}

Tensor dense_forward(const DenseLayer& layer, const Tensor& x, Tensor* post_out) {
    const Tensor xm = as_matrix(x);
    if (xm.cols() != layer.in_dim()) {
        throw DimensionError("dense_forward: input width " + std::to_string(xm.cols()) +
                             " != layer in_dim " + std::to_string(layer.in_dim()));
    }
    Tensor z = matmul(xm, layer.w);
    for (std::size_t i = 0; i < z.rows(); ++i) {
        for (std::size_t j = 0; j < z.cols(); ++j) z.at(i, j) += layer.b[j];
    }
    apply_activation(layer.act, z);
    if (post_out) *post_out = z;
    return z;
}

void dense_backward(const DenseLayer& layer, const Tensor& x, const Tensor& post,
                    const Tensor& dy, Tensor& dw, Tensor& db, Tensor* dx) {
    const Tensor xm = as_matrix(x);
    Tensor dz = dy;  // (n, out)
    if (layer.act == Activation::tanh) {
        // tanh'(z) = 1 - tanh(z)^2, recovered from the cached activation.
        for (std::size_t i = 0; i < dz.size(); ++i) dz[i] *= 1.0 - post[i] * post[i];
    }
    add_inplace(dw, matmul_tn(xm, dz));
    for (std::size_t i = 0; i < dz.rows(); ++i) {
        for (std::size_t j = 0; j < dz.cols(); ++j) db[j] += dz.at(i, j);
    }
    if (dx) *dx = matmul_nt(dz, layer.w);
}

std::size_t MlpModel::input_dim() const {
    if (layers.empty()) throw ContractError("MlpModel: no layers");
    return layers.front().in_dim();
}

std::size_t MlpModel::output_dim() const {
    if (layers.empty()) throw ContractError("MlpModel: no layers");
    return layers.back().out_dim();
}

std::vector<Tensor*> MlpModel::params() {
    std::vector<Tensor*> out;
    for (auto& l : layers) {
        out.push_back(&l.w);
        out.push_back(&l.b);
    }
    return out;
}

std::vector<const Tensor*> MlpModel::params() const {
    std::vector<const Tensor*> out;
    for (const auto& l : layers) {
        out.push_back(&l.w);
        out.push_back(&l.b);
    }
    return out;
}

MlpModel MlpModel::make(const std::vector<std::size_t>& dims, Activation hidden,
                        Activation output, Rng& rng, double out_scale) {
    if (dims.size() < 2) throw ContractError("MlpModel::make: need at least in and out dims");
    MlpModel m;
    for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
        const bool last = (i + 2 == dims.size());
        m.layers.push_back(make_dense(dims[i], dims[i + 1], last ? output : hidden, rng,
                                      last ? out_scale : 1.0));
    }
    return m;
}

ParamGrads zero_grads_like(const std::vector<const Tensor*>& params) {
    ParamGrads g;
    g.grads.reserve(params.size());
    for (const Tensor* p : params) g.grads.emplace_back(p->shape());
    return g;
}

Tensor mlp_forward(const MlpModel& model, const Tensor& input, ActivationCache* cache) {
    if (model.layers.empty()) throw ContractError("mlp_forward: empty model");
    const bool vector_in = input.ndim() == 1;
    Tensor h = as_matrix(input);
    if (cache) {
        cache->model = &model;
        cache->input = h;
        cache->post.clear();
        cache->post.reserve(model.layers.size());
    }
    for (const auto& layer : model.layers) {
        h = dense_forward(layer, h);
        if (cache) cache->post.push_back(h);
    }
    h.ensure_finite("mlp_forward output");
    if (vector_in) return Tensor({h.cols()}, std::vector<double>(h.data(), h.data() + h.size()));
    return h;
}

ParamGrads mlp_backward(const MlpModel& model, const ActivationCache& cache,
                        const Tensor& output_grad, Tensor* input_grad) {
    if (cache.model != &model || cache.post.size() != model.layers.size()) {
        throw ContractError("mlp_backward: cache does not match model");
    }
    std::vector<const Tensor*> params;
    for (const auto& l : model.layers) {
        params.push_back(&l.w);
        params.push_back(&l.b);
    }
    ParamGrads grads = zero_grads_like(params);

    Tensor dy = as_matrix(output_grad);
    if (dy.rows() != cache.input.rows() || dy.cols() != model.output_dim()) {
        throw DimensionError("mlp_backward: output_grad shape mismatch");
    }
    for (std::size_t li = model.layers.size(); li-- > 0;) {
        const Tensor& x = li == 0 ? cache.input : cache.post[li - 1];
        Tensor dx;
        dense_backward(model.layers[li], x, cache.post[li], dy, grads.grads[2 * li],
                       grads.grads[2 * li + 1], (li > 0 || input_grad) ? &dx : nullptr);
        if (li == 0 && input_grad) *input_grad = dx;
        dy = std::move(dx);
    }
    return grads;
}

}  // namespace flowbench::numcore
