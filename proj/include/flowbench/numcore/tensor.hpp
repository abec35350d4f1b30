#pragma once

#include <cstddef>
#include <vector>

#include "flowbench/error.hpp"

namespace flowbench::numcore {

// Dense row-major tensor of doubles. All training math runs in 64-bit floats.
// Finiteness is enforced at module boundaries (losses, optimizer, samplers)
// via ensure_finite rather than after every elementwise op.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> shape);
    Tensor(std::vector<std::size_t> shape, std::vector<double> data);

    static Tensor vec(std::vector<double> values);
    static Tensor full(std::vector<std::size_t> shape, double value);

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t ndim() const { return shape_.size(); }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    // 2-D accessors; throw DimensionError when the tensor is not a matrix.
    std::size_t rows() const;
    std::size_t cols() const;
    double& at(std::size_t r, std::size_t c);
    double at(std::size_t r, std::size_t c) const;

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
    bool all_finite() const;
    void ensure_finite(const char* what) const;  // throws NumericError

    void fill(double value);

private:
    std::vector<std::size_t> shape_;
    std::vector<double> data_;
};

// Elementwise ops (shapes must match).
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor hadamard(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
void add_inplace(Tensor& a, const Tensor& b);
void axpy(Tensor& y, double alpha, const Tensor& x);  // y += alpha * x

// 2-D matrix products.
Tensor matmul(const Tensor& a, const Tensor& b);     // (m,k) x (k,n) -> (m,n)
Tensor matmul_tn(const Tensor& a, const Tensor& b);  // (n,m)^T x (n,k) -> (m,k)
Tensor matmul_nt(const Tensor& a, const Tensor& b);  // (m,k) x (n,k)^T -> (m,n)

// Concatenation along the last axis. Both 1-D vectors and 2-D matrices
// (matching row counts) are supported.
Tensor concat_cols(const Tensor& a, const Tensor& b);

double sum(const Tensor& a);
double dot(const Tensor& a, const Tensor& b);
double squared_norm(const Tensor& a);

Tensor row(const Tensor& m, std::size_t r);                 // copy of row r as 1-D
void set_row(Tensor& m, std::size_t r, const Tensor& v);

}  // namespace flowbench::numcore
