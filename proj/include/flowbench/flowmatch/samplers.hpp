#pragma once

#include <cstdint>

#include "flowbench/flowmatch/field.hpp"
#include "flowbench/flowmatch/schedule.hpp"

namespace flowbench::flowmatch {

struct SampleResult {
    Tensor x;
    std::int64_t nfe = 0;  // field evaluations consumed by this call
};

// x0 + v(0, x0, cond); one field evaluation.
SampleResult sample_onestep(const VelocityField& field, const Tensor& x0, const Tensor& cond);

// K consecutive segment-endpoint jumps from t=0; K field evaluations.
SampleResult sample_segments(const VelocityField& field, const Tensor& x0, const Tensor& cond,
                             const SegmentSchedule& sched);

// Forward Euler on dx/dt = v with n uniform steps; n field evaluations.
SampleResult sample_euler(const VelocityField& field, const Tensor& x0, const Tensor& cond,
                          int n_steps);

}  // namespace flowbench::flowmatch
