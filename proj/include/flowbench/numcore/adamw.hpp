#pragma once

#include <cstdint>
#include <vector>

#include "flowbench/numcore/tensor.hpp"

namespace flowbench::numcore {

struct AdamWConfig {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 1e-6;
};

// Decoupled weight decay: the decay term never enters the moment estimates.
struct OptimizerState {
    AdamWConfig cfg;
    std::int64_t step_count = 0;
    std::vector<Tensor> m;  // first moments, shape-matched to params
    std::vector<Tensor> v;  // second moments
};

OptimizerState make_adamw(const std::vector<Tensor*>& params, AdamWConfig cfg);

// Applies one AdamW update in place. Non-finite gradients abort the step
// before any parameter is touched.
void adamw_step(const std::vector<Tensor*>& params, const std::vector<Tensor>& grads,
                OptimizerState& state);

}  // namespace flowbench::numcore
