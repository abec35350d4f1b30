#pragma once

#include "flowbench/simenv/sim.hpp"

namespace flowbench::simenv {

// Damped least-squares inverse-kinematics velocity toward the committed
// goal, gain-scheduled and rescaled so no component exceeds the action clip.
// The damping keeps the output finite at the folded singularity.
Tensor expert_action(const TaskSpec& task, const ArmState& state);

}  // namespace flowbench::simenv
