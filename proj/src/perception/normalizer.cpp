#include "flowbench/perception/normalizer.hpp"

#include <algorithm>

#include "flowbench/error.hpp"

namespace flowbench::perception {

namespace {

void check_fitted(const Normalizer& norm) {
    if (norm.lo.size() == 0 || !norm.lo.same_shape(norm.hi))
        throw ContractError("normalizer: not fitted");
}

template <typename Fn>
Tensor map_dims(const Normalizer& norm, const Tensor& x, Fn&& fn) {
    check_fitted(norm);
    const std::size_t d = norm.dim();
    if (x.ndim() == 1) {
        if (x.size() != d) throw DimensionError("normalizer: dim mismatch");
        Tensor out({d});
        for (std::size_t j = 0; j < d; ++j) out[j] = fn(x[j], j);
        return out;
    }
    if (x.ndim() == 2) {
        if (x.cols() != d) throw DimensionError("normalizer: dim mismatch");
        Tensor out({x.rows(), d});
        for (std::size_t i = 0; i < x.rows(); ++i)
            for (std::size_t j = 0; j < d; ++j) out.at(i, j) = fn(x.at(i, j), j);
        return out;
    }
    throw DimensionError("normalizer: expected vector or matrix");
}

}  // namespace

Normalizer fit_normalizer(const Tensor& rows) {
    if (rows.ndim() != 2 || rows.rows() == 0)
        throw ContractError("fit_normalizer: need a nonempty (n, d) matrix");
    rows.ensure_finite("fit_normalizer data");
    const std::size_t d = rows.cols();
    Normalizer norm;
    norm.lo = Tensor({d});
    norm.hi = Tensor({d});
    for (std::size_t j = 0; j < d; ++j) {
        double lo = rows.at(0, j), hi = rows.at(0, j);
        for (std::size_t i = 1; i < rows.rows(); ++i) {
            lo = std::min(lo, rows.at(i, j));
            hi = std::max(hi, rows.at(i, j));
        }
        norm.lo[j] = lo;
        norm.hi[j] = hi;
    }
    return norm;
}

Tensor normalize(const Normalizer& norm, const Tensor& x) {
    return map_dims(norm, x, [&](double v, std::size_t j) {
        const double span = norm.hi[j] - norm.lo[j];
        if (span == 0.0) return 0.0;
        return 2.0 * (v - norm.lo[j]) / span - 1.0;
    });
}

Tensor denormalize(const Normalizer& norm, const Tensor& y) {
    return map_dims(norm, y, [&](double v, std::size_t j) {
        const double span = norm.hi[j] - norm.lo[j];
        if (span == 0.0) return norm.lo[j];
        return norm.lo[j] + 0.5 * (v + 1.0) * span;
    });
}

}  // namespace flowbench::perception
