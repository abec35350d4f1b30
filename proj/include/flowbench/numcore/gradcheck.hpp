#pragma once

#include <functional>
#include <vector>

#include "flowbench/numcore/mlp.hpp"
#include "flowbench/numcore/rng.hpp"
#include "flowbench/numcore/tensor.hpp"

namespace flowbench::numcore {

// Central-difference check of analytic gradients. `loss_fn` must be a
// deterministic function of the current parameter values; it is re-evaluated
// with each scalar perturbed by +/- h. Returns the max over entries of
//   |analytic - numeric| / max(|analytic|, |numeric|, 1e-8).
double grad_check(const std::vector<Tensor*>& params,
                  const std::function<double()>& loss_fn,
                  const std::vector<Tensor>& analytic, double h);

// Same check restricted to `max_entries` randomly chosen parameter entries;
// used to spot-check full-size models where exhaustive differencing is slow.
double grad_check_sampled(const std::vector<Tensor*>& params,
                          const std::function<double()>& loss_fn,
                          const std::vector<Tensor>& analytic, double h, Rng& rng,
                          std::size_t max_entries);

// Convenience wrapper matching the core contract: loss_fn evaluates the
// model on a batch and returns (loss, grads) via mlp_backward.
using MlpLossFn = std::function<std::pair<double, ParamGrads>(const MlpModel&)>;
double grad_check(MlpModel& model, const MlpLossFn& loss_fn, double h);

}  // namespace flowbench::numcore
