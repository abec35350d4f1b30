#include "flowbench/simenv/sim.hpp"

#include <cmath>
#include <numbers>

#include "flowbench/error.hpp"

namespace flowbench::simenv {

namespace {

constexpr double kPi = std::numbers::pi;

double clip(double v, double lim) { return std::min(lim, std::max(-lim, v)); }

}  // namespace

void TaskSpec::validate() const {
    if (max_steps < 1) throw ConfigError("task: max_steps must be >= 1");
    if (!(tolerance > 0.0)) throw ConfigError("task: tolerance must be positive");
    if (!(link1 > 0.0) || !(link2 > 0.0)) throw ConfigError("task: links must be positive");
    if (!(dt > 0.0)) throw ConfigError("task: dt must be positive");
    if (!(action_clip > 0.0)) throw ConfigError("task: action_clip must be positive");
    if (!(target_r_min > 0.0) || !(target_r_max > target_r_min))
        throw ConfigError("task: bad target annulus");
    if (target_r_max > link1 + link2) throw ConfigError("task: annulus exceeds reach");
    if (link_points < 2 || target_points < 1) throw ConfigError("task: too few cloud points");
    if (variant == TaskVariant::reach_two_goal && two_goal_min_y >= target_r_max)
        throw ConfigError("task: two_goal_min_y excludes every goal");
}

std::size_t TaskSpec::cloud_points() const {
    const std::size_t goals = variant == TaskVariant::reach_two_goal ? 2 : 1;
    return 2 * link_points + goals * target_points;
}

double wrap_angle(double a) {
    double w = std::remainder(a, 2.0 * kPi);
    if (w <= -kPi) w += 2.0 * kPi;
    return w;
}

ArmState env_reset(const TaskSpec& task, Rng& rng) {
    task.validate();
    ArmState st;
    st.q = Tensor({2});
    st.q[0] = wrap_angle(rng.uniform(-kPi, kPi));
    st.q[1] = wrap_angle(rng.uniform(-kPi, kPi));

    const bool two = task.variant == TaskVariant::reach_two_goal;
    Tensor goal({2});
    for (;;) {
        const double x = rng.uniform(-task.target_r_max, task.target_r_max);
        const double y = rng.uniform(-task.target_r_max, task.target_r_max);
        const double r = std::hypot(x, y);
        if (r < task.target_r_min || r > task.target_r_max) continue;
        if (two && std::fabs(y) < task.two_goal_min_y) continue;
        goal[0] = x;
        goal[1] = y;
        break;
    }
    st.targets.push_back(goal);
    if (two) {
        Tensor mirror({2});
        mirror[0] = goal[0];
        mirror[1] = -goal[1];
        st.targets.push_back(mirror);
        st.expert_goal = rng.uniform() < 0.5 ? 0 : 1;
    }
    return st;
}

ArmState env_step(const TaskSpec& task, const ArmState& state, const Tensor& action) {
    if (action.ndim() != 1 || action.size() != kActionDim)
        throw DimensionError("env_step: action must be a 2-vector");
    action.ensure_finite("env_step action");
    ArmState next = state;
    for (std::size_t j = 0; j < kActionDim; ++j)
        next.q[j] = wrap_angle(state.q[j] + clip(action[j], task.action_clip) * task.dt);
    next.step_index = state.step_index + 1;
    return next;
}

Tensor forward_kinematics(const TaskSpec& task, const Tensor& q) {
    if (q.ndim() != 1 || q.size() != 2) throw DimensionError("forward_kinematics: q must be (2)");
    Tensor ee({2});
    ee[0] = task.link1 * std::cos(q[0]) + task.link2 * std::cos(q[0] + q[1]);
    ee[1] = task.link1 * std::sin(q[0]) + task.link2 * std::sin(q[0] + q[1]);
    return ee;
}

Tensor observe(const TaskSpec& task, const ArmState& state) {
    Tensor ee = forward_kinematics(task, state.q);
    Tensor out({kStateDim});
    out[0] = state.q[0];
    out[1] = state.q[1];
    out[2] = ee[0];
    out[3] = ee[1];
    return out;
}

Tensor render_cloud(const TaskSpec& task, const ArmState& state) {
    const std::size_t n = task.cloud_points();
    Tensor cloud({n, 3});
    std::size_t r = 0;

    const double elbow_x = task.link1 * std::cos(state.q[0]);
    const double elbow_y = task.link1 * std::sin(state.q[0]);
    Tensor ee = forward_kinematics(task, state.q);

    // Link 1: origin -> elbow, inclusive endpoints.
    for (std::size_t i = 0; i < task.link_points; ++i) {
        const double s = static_cast<double>(i) / static_cast<double>(task.link_points - 1);
        cloud.at(r, 0) = s * elbow_x;
        cloud.at(r, 1) = s * elbow_y;
        ++r;
    }
    // Link 2: elbow -> end effector.
    for (std::size_t i = 0; i < task.link_points; ++i) {
        const double s = static_cast<double>(i) / static_cast<double>(task.link_points - 1);
        cloud.at(r, 0) = elbow_x + s * (ee[0] - elbow_x);
        cloud.at(r, 1) = elbow_y + s * (ee[1] - elbow_y);
        ++r;
    }
    // Sunflower-pattern disc around each goal: deterministic, roughly even.
    const double golden = kPi * (3.0 - std::sqrt(5.0));
    for (const Tensor& goal : state.targets) {
        for (std::size_t k = 0; k < task.target_points; ++k) {
            const double rad = task.target_disc_radius *
                               std::sqrt((static_cast<double>(k) + 0.5) /
                                         static_cast<double>(task.target_points));
            const double ang = golden * static_cast<double>(k);
            cloud.at(r, 0) = goal[0] + rad * std::cos(ang);
            cloud.at(r, 1) = goal[1] + rad * std::sin(ang);
            ++r;
        }
    }
    return cloud;
}

bool within_tolerance(const TaskSpec& task, const ArmState& state) {
    Tensor ee = forward_kinematics(task, state.q);
    for (const Tensor& goal : state.targets) {
        if (std::hypot(ee[0] - goal[0], ee[1] - goal[1]) < task.tolerance) return true;
    }
    return false;
}

}  // namespace flowbench::simenv
