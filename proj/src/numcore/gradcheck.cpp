#include "flowbench/numcore/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace flowbench::numcore {

namespace {

double rel_error(double analytic, double numeric) {
    const double denom = std::max({std::fabs(analytic), std::fabs(numeric), 1e-8});
    return std::fabs(analytic - numeric) / denom;
}

double check_entry(Tensor& p, std::size_t j, const std::function<double()>& loss_fn,
                   double analytic, double h) {
    const double saved = p[j];
    p[j] = saved + h;
    const double lp = loss_fn();
    p[j] = saved - h;
    const double lm = loss_fn();
    p[j] = saved;
    if (!std::isfinite(lp) || !std::isfinite(lm)) {
        throw NumericError("grad_check: non-finite loss during differencing");
    }
    return rel_error(analytic, (lp - lm) / (2.0 * h));
}

}  // namespace

double grad_check(const std::vector<Tensor*>& params,
                  const std::function<double()>& loss_fn,
                  const std::vector<Tensor>& analytic, double h) {
    if (h <= 0.0) throw RangeError("grad_check: h must be positive");
    if (params.size() != analytic.size()) {
        throw DimensionError("grad_check: analytic grads do not match params");
    }
    double worst = 0.0;
    for (std::size_t i = 0; i < params.size(); ++i) {
        Tensor& p = *params[i];
        for (std::size_t j = 0; j < p.size(); ++j) {
            worst = std::max(worst, check_entry(p, j, loss_fn, analytic[i][j], h));
        }
    }
    return worst;
}

double grad_check_sampled(const std::vector<Tensor*>& params,
                          const std::function<double()>& loss_fn,
                          const std::vector<Tensor>& analytic, double h, Rng& rng,
                          std::size_t max_entries) {
    if (h <= 0.0) throw RangeError("grad_check: h must be positive");
    std::size_t total = 0;
    for (const Tensor* p : params) total += p->size();
    if (total <= max_entries) return grad_check(params, loss_fn, analytic, h);

    double worst = 0.0;
    for (std::size_t k = 0; k < max_entries; ++k) {
        std::size_t flat = rng.uniform_index(total);
        std::size_t i = 0;
        while (flat >= params[i]->size()) {
            flat -= params[i]->size();
            ++i;
        }
        worst = std::max(worst, check_entry(*params[i], flat, loss_fn, analytic[i][flat], h));
    }
    return worst;
}

double grad_check(MlpModel& model, const MlpLossFn& loss_fn, double h) {
    auto [loss, grads] = loss_fn(model);
    (void)loss;
    return grad_check(model.params(), [&]() { return loss_fn(model).first; }, grads.grads, h);
}

}  // namespace flowbench::numcore
