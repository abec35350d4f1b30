#pragma once

#include "flowbench/numcore/tensor.hpp"

namespace flowbench::perception {

using numcore::Tensor;

// Per-dimension affine map onto [-1, 1], fitted from data extrema.
// Degenerate dimensions (max == min) normalize to 0 and invert to min.
struct Normalizer {
    Tensor lo;  // (d) per-dimension minimum of the fitted data
    Tensor hi;  // (d) per-dimension maximum

    std::size_t dim() const { return lo.size(); }
};

// rows: (n, d), n >= 1.
Normalizer fit_normalizer(const Tensor& rows);

// x may be (d) or (n, d); output has matching shape. Inputs outside the
// fitted range extrapolate past [-1, 1].
Tensor normalize(const Normalizer& norm, const Tensor& x);
Tensor denormalize(const Normalizer& norm, const Tensor& y);

}  // namespace flowbench::perception
