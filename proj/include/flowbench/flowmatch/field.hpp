#pragma once

#include <cstdint>
#include <functional>

#include "flowbench/numcore/tensor.hpp"

namespace flowbench::flowmatch {

using numcore::Tensor;

// Time-dependent velocity field v(t, x, cond). `cond` may be empty for
// unconditional fields. Every eval() bumps an instrumented counter so
// samplers can account NFE exactly.
class VelocityField {
public:
    virtual ~VelocityField() = default;

    Tensor eval(double t, const Tensor& x, const Tensor& cond = {}) const {
        ++eval_count_;
        return do_eval(t, x, cond);
    }

    std::int64_t eval_count() const { return eval_count_; }
    void reset_eval_count() const { eval_count_ = 0; }

protected:
    virtual Tensor do_eval(double t, const Tensor& x, const Tensor& cond) const = 0;

private:
    mutable std::int64_t eval_count_ = 0;
};

// Wraps a closure; used for analytic fields and stubs.
class FuncField : public VelocityField {
public:
    using Fn = std::function<Tensor(double, const Tensor&, const Tensor&)>;
    explicit FuncField(Fn fn) : fn_(std::move(fn)) {}

protected:
    Tensor do_eval(double t, const Tensor& x, const Tensor& cond) const override {
        return fn_(t, x, cond);
    }

private:
    Fn fn_;
};

}  // namespace flowbench::flowmatch
