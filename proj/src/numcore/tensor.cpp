#include "flowbench/numcore/tensor.hpp"

#include <cmath>
#include <cstring>
#include <numeric>
#include <string>

namespace flowbench::numcore {

namespace {

std::size_t shape_product(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return shape.empty() ? 0 : n;
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (!a.same_shape(b)) {
        throw DimensionError(std::string(op) + ": shape mismatch");
    }
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape)
    : shape_(std::move(shape)), data_(shape_product(shape_), 0.0) {}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    if (shape_product(shape_) != data_.size()) {
        throw DimensionError("Tensor: data size does not match shape");
    }
}

Tensor Tensor::vec(std::vector<double> values) {
    std::size_t n = values.size();
    return Tensor({n}, std::move(values));
}

Tensor Tensor::full(std::vector<std::size_t> shape, double value) {
    Tensor t(std::move(shape));
    t.fill(value);
    return t;
}

std::size_t Tensor::rows() const {
    if (ndim() != 2) throw DimensionError("Tensor::rows: not a matrix");
    return shape_[0];
}

std::size_t Tensor::cols() const {
    if (ndim() != 2) throw DimensionError("Tensor::cols: not a matrix");
    return shape_[1];
}

double& Tensor::at(std::size_t r, std::size_t c) {
    return data_[r * cols() + c];
}

double Tensor::at(std::size_t r, std::size_t c) const {
    return data_[r * cols() + c];
}

bool Tensor::all_finite() const {
    for (double v : data_) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

void Tensor::ensure_finite(const char* what) const {
    if (!all_finite()) {
        throw NumericError(std::string("non-finite values in ") + what);
    }
}

void Tensor::fill(double value) {
    std::fill(data_.begin(), data_.end(), value);
}

Tensor add(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "add");
    Tensor out(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
    return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "sub");
    Tensor out(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
    return out;
}

Tensor hadamard(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "hadamard");
    Tensor out(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
    return out;
}

Tensor scale(const Tensor& a, double s) {
    Tensor out(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * s;
    return out;
}

void add_inplace(Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "add_inplace");
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
}

void axpy(Tensor& y, double alpha, const Tensor& x) {
    require_same_shape(y, x, "axpy");
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += alpha * x[i];
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
    if (b.rows() != k) throw DimensionError("matmul: inner dims differ");
    Tensor c({m, n});
    const double* ap = a.data();
    const double* bp = b.data();
    double* cp = c.data();
    for (std::size_t i = 0; i < m; ++i) {
        double* crow = cp + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const double av = ap[i * k + p];
            const double* brow = bp + p * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
    return c;
}

Tensor matmul_tn(const Tensor& a, const Tensor& b) {
    const std::size_t n = a.rows(), m = a.cols(), k = b.cols();
    if (b.rows() != n) throw DimensionError("matmul_tn: row counts differ");
    Tensor c({m, k});
    const double* ap = a.data();
    const double* bp = b.data();
    double* cp = c.data();
    for (std::size_t r = 0; r < n; ++r) {
        const double* arow = ap + r * m;
        const double* brow = bp + r * k;
        for (std::size_t i = 0; i < m; ++i) {
            const double av = arow[i];
            double* crow = cp + i * k;
            for (std::size_t j = 0; j < k; ++j) crow[j] += av * brow[j];
        }
    }
    return c;
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
    const std::size_t m = a.rows(), k = a.cols(), n = b.rows();
    if (b.cols() != k) throw DimensionError("matmul_nt: col counts differ");
    Tensor c({m, n});
    const double* ap = a.data();
    const double* bp = b.data();
    double* cp = c.data();
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = ap + i * k;
        for (std::size_t j = 0; j < n; ++j) {
            const double* brow = bp + j * k;
            double acc = 0.0;
            for (std::size_t p = 0; p < k; ++p) acc += arow[p] * brow[p];
            cp[i * n + j] = acc;
        }
    }
    return c;
}

Tensor concat_cols(const Tensor& a, const Tensor& b) {
    if (a.ndim() == 1 && b.ndim() == 1) {
        Tensor out({a.size() + b.size()});
        std::memcpy(out.data(), a.data(), a.size() * sizeof(double));
        std::memcpy(out.data() + a.size(), b.data(), b.size() * sizeof(double));
        return out;
    }
    if (a.ndim() == 2 && b.ndim() == 2) {
        if (a.rows() != b.rows()) throw DimensionError("concat_cols: row counts differ");
        const std::size_t m = a.rows(), ca = a.cols(), cb = b.cols();
        Tensor out({m, ca + cb});
        for (std::size_t i = 0; i < m; ++i) {
            std::memcpy(out.data() + i * (ca + cb), a.data() + i * ca, ca * sizeof(double));
            std::memcpy(out.data() + i * (ca + cb) + ca, b.data() + i * cb, cb * sizeof(double));
        }
        return out;
    }
    throw DimensionError("concat_cols: rank mismatch");
}

double sum(const Tensor& a) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i];
    return acc;
}

double dot(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "dot");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

double squared_norm(const Tensor& a) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * a[i];
    return acc;
}

Tensor row(const Tensor& m, std::size_t r) {
    const std::size_t n = m.cols();
    if (r >= m.rows()) throw RangeError("row: index out of range");
    Tensor out({n});
    std::memcpy(out.data(), m.data() + r * n, n * sizeof(double));
    return out;
}

void set_row(Tensor& m, std::size_t r, const Tensor& v) {
    const std::size_t n = m.cols();
    if (v.size() != n) throw DimensionError("set_row: width mismatch");
    if (r >= m.rows()) throw RangeError("set_row: index out of range");
    std::memcpy(m.data() + r * n, v.data(), n * sizeof(double));
}

}  // namespace flowbench::numcore
