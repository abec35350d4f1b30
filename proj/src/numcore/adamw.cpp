#include "flowbench/numcore/adamw.hpp"

#include <cmath>

namespace flowbench::numcore {

OptimizerState make_adamw(const std::vector<Tensor*>& params, AdamWConfig cfg) {
    OptimizerState st;
    st.cfg = cfg;
    st.m.reserve(params.size());
    st.v.reserve(params.size());
    for (const Tensor* p : params) {
        st.m.emplace_back(p->shape());
        st.v.emplace_back(p->shape());
    }
    return st;
}

void adamw_step(const std::vector<Tensor*>& params, const std::vector<Tensor>& grads,
                OptimizerState& state) {
    if (params.size() != grads.size() || params.size() != state.m.size()) {
        throw DimensionError("adamw_step: param/grad/state count mismatch");
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (!params[i]->same_shape(grads[i])) {
            throw DimensionError("adamw_step: grad shape mismatch");
        }
        grads[i].ensure_finite("adamw_step gradients");
    }

    const AdamWConfig& c = state.cfg;
    state.step_count += 1;
    const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step_count));
    const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step_count));

    for (std::size_t i = 0; i < params.size(); ++i) {
        Tensor& p = *params[i];
        const Tensor& g = grads[i];
        Tensor& m = state.m[i];
        Tensor& v = state.v[i];
        for (std::size_t j = 0; j < p.size(); ++j) {
            m[j] = c.beta1 * m[j] + (1.0 - c.beta1) * g[j];
            v[j] = c.beta2 * v[j] + (1.0 - c.beta2) * g[j] * g[j];
            const double mhat = m[j] / bc1;
            const double vhat = v[j] / bc2;
            p[j] -= c.lr * (mhat / (std::sqrt(vhat) + c.eps) + c.weight_decay * p[j]);
        }
    }
}

}  // namespace flowbench::numcore
