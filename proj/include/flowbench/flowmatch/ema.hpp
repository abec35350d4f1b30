#pragma once

#include <vector>

#include "flowbench/numcore/tensor.hpp"

namespace flowbench::flowmatch {

using numcore::Tensor;

// Exponential moving average of a parameter set. Shadow shapes are fixed at
// construction and every update is validated against them.
struct EmaState {
    double decay = 0.95;
    std::vector<Tensor> shadow;
};

EmaState make_ema(const std::vector<const Tensor*>& params, double decay);

// shadow <- decay * shadow + (1 - decay) * current
void ema_update(EmaState& ema, const std::vector<const Tensor*>& params);

}  // namespace flowbench::flowmatch
