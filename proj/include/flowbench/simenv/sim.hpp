#pragma once

#include <cstddef>
#include <vector>

#include "flowbench/numcore/rng.hpp"
#include "flowbench/numcore/tensor.hpp"

namespace flowbench::simenv {

using numcore::Rng;
using numcore::Tensor;

enum class TaskVariant { reach, reach_two_goal };

struct TaskSpec {
    TaskVariant variant = TaskVariant::reach;
    int max_steps = 100;
    double tolerance = 0.05;      // meters
    double link1 = 0.5;           // meters
    double link2 = 0.5;
    double dt = 0.05;             // seconds
    double action_clip = 1.0;     // rad/s per joint
    double target_r_min = 0.3;    // reachable annulus for goals
    double target_r_max = 0.9;
    double two_goal_min_y = 0.2;  // keeps mirrored goals apart
    std::size_t link_points = 48;
    std::size_t target_points = 32;
    double target_disc_radius = 0.04;

    void validate() const;
    std::size_t cloud_points() const;
};

struct ArmState {
    Tensor q;                     // (2), wrapped to (-pi, pi]
    std::vector<Tensor> targets;  // 1 (reach) or 2 (two-goal) positions, each (2)
    int step_index = 0;
    std::size_t expert_goal = 0;  // goal committed to at reset (two-goal variant)
};

// Maps any angle into (-pi, pi].
double wrap_angle(double a);

// Draw order is fixed (joints, goal, coin) so a seed fully determines the
// reset. Two-goal targets are exact mirror images across the x axis.
ArmState env_reset(const TaskSpec& task, Rng& rng);

// q += clip(action) * dt, wrapped; pure function of (state, action).
ArmState env_step(const TaskSpec& task, const ArmState& state, const Tensor& action);

Tensor forward_kinematics(const TaskSpec& task, const Tensor& q);

// Proprioceptive state vector [q0, q1, ee_x, ee_y]; goals appear only in the
// point cloud.
Tensor observe(const TaskSpec& task, const ArmState& state);
constexpr std::size_t kStateDim = 4;
constexpr std::size_t kActionDim = 2;

// Synthetic cloud: link_points per link segment plus target_points on a
// small disc around each goal, all at z = 0. Point count and ordering are a
// pure function of the state.
Tensor render_cloud(const TaskSpec& task, const ArmState& state);

// True when the end effector is within tolerance of any goal.
bool within_tolerance(const TaskSpec& task, const ArmState& state);

}  // namespace flowbench::simenv
