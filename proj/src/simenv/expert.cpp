#include "flowbench/simenv/expert.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include "flowbench/error.hpp"

namespace flowbench::simenv {

namespace {

constexpr double kDamping = 0.1;      // lambda of the damped pseudo-inverse
constexpr double kTaskGain = 6.0;     // task-space error gain (final approach)
constexpr double kJointGain = 6.0;    // joint-space error gain (far field)
constexpr double kNearRadius = 0.15;  // below: pure task-space servo
constexpr double kFarRadius = 0.35;   // above: pure joint-space drive
constexpr double kStandoff = 0.12;    // keep-out ring around non-committed goals
constexpr double kOutward = 0.7;      // radial bias while skirting a distractor

}  // namespace

Tensor expert_action(const TaskSpec& task, const ArmState& state) {
    if (state.targets.empty()) throw ContractError("expert_action: state has no goal");
    const std::size_t committed = std::min(state.expert_goal, state.targets.size() - 1);
    const Tensor& goal = state.targets[committed];
    const Tensor ee = forward_kinematics(task, state.q);
    const double dx = goal[0] - ee[0];
    const double dy = goal[1] - ee[1];
    const double dist = std::hypot(dx, dy);

    const double s0 = std::sin(state.q[0]), c0 = std::cos(state.q[0]);
    const double s01 = std::sin(state.q[0] + state.q[1]);
    const double c01 = std::cos(state.q[0] + state.q[1]);
    const double j00 = -task.link1 * s0 - task.link2 * s01;
    const double j01 = -task.link2 * s01;
    const double j10 = task.link1 * c0 + task.link2 * c01;
    const double j11 = task.link2 * c01;
    // qdot = J^T (J J^T + damping^2 I)^-1 e. The damping bounds the inverse
    // even when J loses rank, and e = 0 gives a zero action.
    const double a = j00 * j00 + j01 * j01 + kDamping * kDamping;
    const double b = j00 * j10 + j01 * j11;
    const double c = j10 * j10 + j11 * j11 + kDamping * kDamping;
    const double det = a * c - b * b;
    const auto dls = [&](double ex, double ey) {
        const double wx = (c * ex - b * ey) / det;
        const double wy = (a * ey - b * ex) / det;
        return std::pair<double, double>{j00 * wx + j10 * wy, j01 * wx + j11 * wy};
    };

    const auto [task0, task1] = dls(kTaskGain * dx, kTaskGain * dy);

    // Far-field drive: straight task-space pursuit can drag the end effector
    // through the folded region where the Jacobian is near-singular and
    // progress collapses, so far from the goal the gain schedule hands the
    // velocity to a joint-space pull toward the closed-form IK solution of the
    // goal (the elbow branch nearest in wrapped joint distance).
    const double r2 = goal[0] * goal[0] + goal[1] * goal[1];
    const double cos_elbow = std::clamp(
        (r2 - task.link1 * task.link1 - task.link2 * task.link2) / (2.0 * task.link1 * task.link2),
        -1.0, 1.0);
    const double elbow = std::acos(cos_elbow);
    double joint0 = 0.0, joint1 = 0.0, best = std::numeric_limits<double>::infinity();
    for (const double q1c : {elbow, -elbow}) {
        const double q0c =
            std::atan2(goal[1], goal[0]) -
            std::atan2(task.link2 * std::sin(q1c), task.link1 + task.link2 * std::cos(q1c));
        const double e0 = wrap_angle(q0c - state.q[0]);
        const double e1 = wrap_angle(q1c - state.q[1]);
        const double cost = std::max(std::fabs(e0), std::fabs(e1));
        if (cost < best) {
            best = cost;
            joint0 = kJointGain * e0;
            joint1 = kJointGain * e1;
        }
    }

    const double w =
        std::clamp((dist - kNearRadius) / (kFarRadius - kNearRadius), 0.0, 1.0);
    Tensor qdot({2});
    qdot[0] = (1.0 - w) * task0 + w * joint0;
    qdot[1] = (1.0 - w) * task1 + w * joint1;

    // The sweep toward the committed goal may pass over a non-committed one,
    // which would end the episode at the wrong target; inside the standoff
    // ring the velocity is replaced by a tangential skirt around it.
    for (std::size_t g = 0; g < state.targets.size(); ++g) {
        if (g == committed) continue;
        const double ox = ee[0] - state.targets[g][0];
        const double oy = ee[1] - state.targets[g][1];
        const double od = std::hypot(ox, oy);
        if (od >= kStandoff || od == 0.0) continue;
        const double ux = ox / od, uy = oy / od;
        double tx = -uy, ty = ux;
        if (tx * dx + ty * dy < 0.0) {
            tx = -tx;
            ty = -ty;
        }
        const auto [skirt0, skirt1] =
            dls(kTaskGain * (tx + kOutward * ux), kTaskGain * (ty + kOutward * uy));
        qdot[0] = skirt0;
        qdot[1] = skirt1;
    }

    const double peak = std::max(std::fabs(qdot[0]), std::fabs(qdot[1]));
    if (peak > task.action_clip) {
        const double s = task.action_clip / peak;
        qdot[0] *= s;
        qdot[1] *= s;
    }
    qdot.ensure_finite("expert action");
    return qdot;
}

}  // namespace flowbench::simenv
