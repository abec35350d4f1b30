#pragma once

#include <vector>

#include "flowbench/flowmatch/ema.hpp"
#include "flowbench/flowmatch/field.hpp"
#include "flowbench/flowmatch/mlp_field.hpp"
#include "flowbench/flowmatch/schedule.hpp"

namespace flowbench::flowmatch {

// One coupled training pair. `t` must already lie inside the sampling
// interval of its segment (the trainer draws it; see SegmentSchedule).
struct CouplingSample {
    Tensor x0;
    Tensor x1;
    double t = 0.0;
    Tensor cond;  // empty when unconditional
};

// x_t = (1-t) x0 + t x1
Tensor interpolate(const Tensor& x0, const Tensor& x1, double t);

// Straight-line jump of x to the end of segment i: x + ((i+1)/K - t) * v(t, x).
// One field evaluation.
Tensor f_map(const VelocityField& field, double t, const Tensor& x, const Tensor& cond,
             int segment, int num_segments);

struct LossResult {
    double value = 0.0;
    std::vector<Tensor> grads;  // parallel to MlpVelocityField::params()
    Tensor cond_grads;          // (n, cond_dim); empty when unconditional
};

// Regression of the field onto the linear-path velocity x1 - x0, mean over
// the batch of squared norms.
double cfm_loss_value(const VelocityField& field, const std::vector<CouplingSample>& batch);
LossResult cfm_loss(const MlpVelocityField& field, const std::vector<CouplingSample>& batch);

// Frozen target-branch outputs: the f-map and velocity at (t + delta_t,
// x_{t+dt}) under the EMA parameters. No gradient flows through these.
struct ConsistencyTargets {
    std::vector<int> segments;  // per-sample segment index
    Tensor f_tgt;               // (n, d)
    Tensor v_tgt;               // (n, d)
};

ConsistencyTargets consistency_targets(const MlpVelocityField& field, const EmaState& ema,
                                       const SegmentSchedule& sched,
                                       const std::vector<CouplingSample>& batch);

// Per-sample lambda_i * ||f_live - f_tgt||^2 + alpha * ||v_live - v_tgt||^2,
// mean over the batch, differentiated with the targets held fixed.
LossResult consistency_loss_given_targets(const MlpVelocityField& field,
                                          const SegmentSchedule& sched,
                                          const std::vector<CouplingSample>& batch,
                                          const ConsistencyTargets& targets);

LossResult consistency_fm_loss(const MlpVelocityField& field, const EmaState& ema,
                               const SegmentSchedule& sched,
                               const std::vector<CouplingSample>& batch);

// Value-only form over the abstract field interface, for analytic oracles.
double consistency_fm_loss_value(const VelocityField& live, const VelocityField& target,
                                 const SegmentSchedule& sched,
                                 const std::vector<CouplingSample>& batch);

}  // namespace flowbench::flowmatch
