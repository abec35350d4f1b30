#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "flowbench/flowmatch/field.hpp"
#include "flowbench/numcore/tensor.hpp"

namespace testsupport {

using flowbench::numcore::Tensor;

// Unique scratch directory, removed on destruction.
struct TmpDir {
    std::filesystem::path path;

    TmpDir() {
        std::random_device rd;
        path = std::filesystem::temp_directory_path() /
               ("flowbench-test-" + std::to_string(rd()) + "-" + std::to_string(rd()));
        std::filesystem::create_directories(path);
    }
    ~TmpDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    TmpDir(const TmpDir&) = delete;
    TmpDir& operator=(const TmpDir&) = delete;
};

// Closed-form field transporting every point to `target` along a straight
// line by t=1: v(t, x) = (target - x) / (1 - t). Its flow is exactly
// x(t) = (1-t) x0 + t target, so every f-map lands on the true endpoint and
// the consistency residual vanishes identically. Only valid for t < 1.
inline flowbench::flowmatch::FuncField point_target_field(Tensor target) {
    return flowbench::flowmatch::FuncField(
        [target](double t, const Tensor& x, const Tensor&) {
            Tensor v = x;
            for (std::size_t k = 0; k < v.size(); ++k)
                v[k] = (target[k] - x[k]) / (1.0 - t);
            return v;
        });
}

// Field that ignores its inputs and returns a copy of `c`.
inline flowbench::flowmatch::FuncField constant_field(Tensor c) {
    return flowbench::flowmatch::FuncField(
        [c](double, const Tensor&, const Tensor&) { return c; });
}

inline double max_abs_diff(const Tensor& a, const Tensor& b) {
    double worst = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        const double d = std::fabs(a[k] - b[k]);
        if (d > worst) worst = d;
    }
    return worst;
}

}  // namespace testsupport
