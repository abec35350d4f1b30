#include "flowbench/flowmatch/samplers.hpp"

#include "flowbench/error.hpp"
#include "flowbench/flowmatch/losses.hpp"

namespace flowbench::flowmatch {

SampleResult sample_onestep(const VelocityField& field, const Tensor& x0, const Tensor& cond) {
    const std::int64_t before = field.eval_count();
    Tensor v = field.eval(0.0, x0, cond);
    if (!v.same_shape(x0)) throw DimensionError("onestep: field output shape mismatch");
    SampleResult res;
    res.x = numcore::add(x0, v);
    res.x.ensure_finite("onestep sample");
    res.nfe = field.eval_count() - before;
    return res;
}

SampleResult sample_segments(const VelocityField& field, const Tensor& x0, const Tensor& cond,
                             const SegmentSchedule& sched) {
    sched.validate();
    const std::int64_t before = field.eval_count();
    Tensor x = x0;
    for (int i = 0; i < sched.segments; ++i)
        x = f_map(field, sched.segment_start(i), x, cond, i, sched.segments);
    x.ensure_finite("segment sample");
    SampleResult res;
    res.x = std::move(x);
    res.nfe = field.eval_count() - before;
    return res;
}

SampleResult sample_euler(const VelocityField& field, const Tensor& x0, const Tensor& cond,
                          int n_steps) {
    if (n_steps < 1) throw RangeError("euler: n_steps must be positive");
    const std::int64_t before = field.eval_count();
    const double h = 1.0 / n_steps;
    Tensor x = x0;
    for (int i = 0; i < n_steps; ++i) {
        const double t = static_cast<double>(i) * h;
        Tensor v = field.eval(t, x, cond);
        if (!v.same_shape(x)) throw DimensionError("euler: field output shape mismatch");
        numcore::axpy(x, h, v);
    }
    x.ensure_finite("euler sample");
    SampleResult res;
    res.x = std::move(x);
    res.nfe = field.eval_count() - before;
    return res;
}

}  // namespace flowbench::flowmatch
