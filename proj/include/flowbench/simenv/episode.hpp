#pragma once

#include <functional>
#include <string>
#include <vector>

#include "flowbench/simenv/sim.hpp"

namespace flowbench::simenv {

// Rolling observation window, oldest frame first. Always holds exactly the
// configured horizon; at episode start the first frame is replicated.
struct Observation {
    std::vector<Tensor> clouds;  // each (N, 3)
    std::vector<Tensor> states;  // each (kStateDim)
};

// Maps an observation to a chunk of actions (k >= 1 rows, kActionDim cols)
// executed open-loop before the next query. The ArmState is passed for
// privileged controllers (the scripted expert); learned policies ignore it.
using PolicyFn = std::function<Tensor(const Observation&, const ArmState&)>;

struct EpisodeRecord {
    std::vector<Tensor> states;   // observation vector before each executed action
    std::vector<Tensor> clouds;   // cloud before each executed action
    std::vector<Tensor> actions;  // executed action
    bool success = false;
    int steps_used = 0;
    std::string error_tag;        // nonempty when the policy emitted junk
    std::vector<Tensor> targets;  // goals of this episode
    std::size_t expert_goal = 0;
};

// Receding-horizon rollout: query the policy, execute its chunk step by
// step, stop at the first success (distance < tolerance to any goal, checked
// at reset too) or after task.max_steps actions. Non-finite policy output
// fails the episode with an error tag instead of throwing.
EpisodeRecord run_episode(const PolicyFn& policy, const TaskSpec& task, Rng& rng,
                          std::size_t obs_horizon);

// The scripted expert as a PolicyFn emitting one action per query.
PolicyFn expert_policy(const TaskSpec& task);

}  // namespace flowbench::simenv
