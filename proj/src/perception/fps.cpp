#include "flowbench/perception/fps.hpp"

#include <limits>

#include "flowbench/error.hpp"

namespace flowbench::perception {

std::vector<std::size_t> fps(const Tensor& cloud, std::size_t m, std::size_t start_index) {
    if (cloud.ndim() != 2 || cloud.cols() != 3)
        throw DimensionError("fps: cloud must be (N, 3)");
    const std::size_t n = cloud.rows();
    if (n == 0) throw RangeError("fps: empty cloud");
    cloud.ensure_finite("fps cloud");
    if (m < 1 || m > n) throw RangeError("fps: require 1 <= m <= N");
    if (start_index >= n) throw RangeError("fps: start_index out of range");

    std::vector<std::size_t> picked;
    picked.reserve(m);
    picked.push_back(start_index);

    // Squared distance from each point to its nearest selected point.
    std::vector<double> best(n, std::numeric_limits<double>::infinity());
    std::size_t last = start_index;
    while (picked.size() < m) {
        for (std::size_t i = 0; i < n; ++i) {
            double d2 = 0.0;
            for (std::size_t c = 0; c < 3; ++c) {
                const double d = cloud.at(i, c) - cloud.at(last, c);
                d2 += d * d;
            }
            if (d2 < best[i]) best[i] = d2;
        }
        std::size_t arg = 0;
        double far = -1.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (best[i] > far) {  // strict: lowest index wins ties
                far = best[i];
                arg = i;
            }
        }
        picked.push_back(arg);
        last = arg;
    }
    return picked;
}

std::size_t canonical_start(const Tensor& cloud) {
    if (cloud.ndim() != 2 || cloud.cols() != 3)
        throw DimensionError("canonical_start: cloud must be (N, 3)");
    if (cloud.rows() == 0) throw RangeError("canonical_start: empty cloud");
    cloud.ensure_finite("canonical_start cloud");
    std::size_t arg = 0;
    for (std::size_t i = 1; i < cloud.rows(); ++i) {
        for (std::size_t c = 0; c < 3; ++c) {
            if (cloud.at(i, c) < cloud.at(arg, c)) {
                arg = i;
                break;
            }
            if (cloud.at(i, c) > cloud.at(arg, c)) break;
        }
    }
    return arg;
}

Tensor gather_rows(const Tensor& cloud, const std::vector<std::size_t>& indices) {
    if (cloud.ndim() != 2) throw DimensionError("gather_rows: need a matrix");
    Tensor out({indices.size(), cloud.cols()});
    for (std::size_t r = 0; r < indices.size(); ++r) {
        if (indices[r] >= cloud.rows()) throw RangeError("gather_rows: index out of range");
        for (std::size_t c = 0; c < cloud.cols(); ++c) out.at(r, c) = cloud.at(indices[r], c);
    }
    return out;
}

}  // namespace flowbench::perception
