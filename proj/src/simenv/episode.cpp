#include "flowbench/simenv/episode.hpp"

#include "flowbench/error.hpp"
#include "flowbench/simenv/expert.hpp"

namespace flowbench::simenv {

namespace {

void push_frame(Observation& obs, std::size_t horizon, Tensor cloud, Tensor state) {
    obs.clouds.push_back(std::move(cloud));
    obs.states.push_back(std::move(state));
    while (obs.clouds.size() > horizon) {
        obs.clouds.erase(obs.clouds.begin());
        obs.states.erase(obs.states.begin());
    }
}

}  // namespace

EpisodeRecord run_episode(const PolicyFn& policy, const TaskSpec& task, Rng& rng,
                          std::size_t obs_horizon) {
    task.validate();
    if (obs_horizon < 1) throw RangeError("run_episode: obs_horizon must be >= 1");

    ArmState state = env_reset(task, rng);
    EpisodeRecord rec;
    rec.targets = state.targets;
    rec.expert_goal = state.expert_goal;

    Observation obs;
    for (std::size_t i = 0; i < obs_horizon; ++i)
        push_frame(obs, obs_horizon, render_cloud(task, state), observe(task, state));

    if (within_tolerance(task, state)) {
        rec.success = true;
        return rec;
    }

    while (state.step_index < task.max_steps) {
        Tensor chunk = policy(obs, state);
        if (chunk.ndim() != 2 || chunk.rows() < 1 || chunk.cols() != kActionDim)
            throw ContractError("run_episode: policy chunk must be (k, 2)");
        for (std::size_t r = 0; r < chunk.rows(); ++r) {
            Tensor action = numcore::row(chunk, r);
            if (!action.all_finite()) {
                rec.error_tag = "non_finite_action";
                rec.steps_used = state.step_index;
                return rec;
            }
            rec.states.push_back(observe(task, state));
            rec.clouds.push_back(render_cloud(task, state));
            rec.actions.push_back(action);
            state = env_step(task, state, action);
            push_frame(obs, obs_horizon, render_cloud(task, state), observe(task, state));
            if (within_tolerance(task, state)) {
                rec.success = true;
                rec.steps_used = state.step_index;
                return rec;
            }
            if (state.step_index >= task.max_steps) break;
        }
    }
    rec.steps_used = state.step_index;
    return rec;
}

PolicyFn expert_policy(const TaskSpec& task) {
    return [task](const Observation&, const ArmState& state) {
        Tensor action = expert_action(task, state);
        Tensor chunk({1, kActionDim});
        chunk.at(0, 0) = action[0];
        chunk.at(0, 1) = action[1];
        return chunk;
    };
}

}  // namespace flowbench::simenv
