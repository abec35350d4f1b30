#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

#include "flowbench/error.hpp"
#include "flowbench/perception/fps.hpp"
#include "flowbench/policy/policy.hpp"

namespace flowbench::policy {

TrainMethod parse_method(const std::string& name) {
    if (name == "consistency") return TrainMethod::consistency;
    if (name == "cfm") return TrainMethod::cfm;
    throw ConfigError("unknown training method: " + name);
}

std::string method_name(TrainMethod method) {
    return method == TrainMethod::consistency ? "consistency" : "cfm";
}

SamplerSpec SamplerSpec::parse(const std::string& name) {
    SamplerSpec spec;
    if (name == "onestep") {
        spec.kind = Kind::onestep;
        return spec;
    }
    if (name == "segments") {
        spec.kind = Kind::segments;
        return spec;
    }
    if (name.rfind("euler-", 0) == 0) {
        const std::string digits = name.substr(6);
        if (!digits.empty() &&
            std::all_of(digits.begin(), digits.end(), [](char c) { return c >= '0' && c <= '9'; })) {
            const long steps = std::stol(digits);
            if (steps >= 1) {
                spec.kind = Kind::euler;
                spec.euler_steps = static_cast<int>(steps);
                return spec;
            }
        }
    }
    throw ConfigError("unknown sampler: " + name +
                      " (expected onestep, segments, or euler-N)");
}

std::string SamplerSpec::name() const {
    switch (kind) {
        case Kind::onestep:
            return "onestep";
        case Kind::segments:
            return "segments";
        case Kind::euler:
            return "euler-" + std::to_string(euler_steps);
    }
    throw ContractError("corrupt sampler kind");
}

void PolicyConfig::validate() const {
    if (obs_horizon < 1) throw ConfigError("obs_horizon must be >= 1");
    if (pred_horizon < 1) throw ConfigError("pred_horizon must be >= 1");
    if (exec_horizon < 1 || exec_horizon > pred_horizon)
        throw ConfigError("exec_horizon must satisfy 1 <= exec <= pred");
    schedule.validate();
    if (hidden.empty()) throw ConfigError("hidden layer list must be nonempty");
    for (const std::size_t h : hidden)
        if (h < 1) throw ConfigError("hidden widths must be positive");
    if (time_dim < 2 || time_dim % 2 != 0) throw ConfigError("time_dim must be even and >= 2");
    if (encoder.point_hidden < 1 || encoder.point_features < 1 || encoder.out_dim < 1)
        throw ConfigError("encoder dims must be positive");
    if (fps_points < 1) throw ConfigError("fps_points must be >= 1");
    if (optim.lr <= 0.0) throw ConfigError("learning rate must be positive");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (ema_decay < 0.0 || ema_decay >= 1.0) throw ConfigError("ema_decay must be in [0, 1)");
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
    if (eval_every < 1) throw ConfigError("eval_every must be >= 1");
    if (eval_episodes < 1) throw ConfigError("eval_episodes must be >= 1");
    if (demo_count < 1) throw ConfigError("demo_count must be >= 1");
    SamplerSpec::parse(eval_sampler);
}

namespace {

// All demos' rows of one record field stacked into an (n, d) matrix.
Tensor stack_record_rows(const std::vector<simenv::EpisodeRecord>& demos,
                         const std::vector<Tensor> simenv::EpisodeRecord::* field,
                         std::size_t dim, const char* what) {
    std::size_t total = 0;
    for (const auto& demo : demos) total += (demo.*field).size();
    if (total == 0) throw ContractError(std::string("no ") + what + " rows across demos");
    Tensor rows({total, dim});
    std::size_t r = 0;
    for (const auto& demo : demos) {
        for (const Tensor& v : demo.*field) {
            if (v.size() != dim) throw DimensionError(std::string(what) + " row has wrong dim");
            for (std::size_t j = 0; j < dim; ++j) rows.at(r, j) = v[j];
            ++r;
        }
    }
    return rows;
}

}  // namespace

perception::Normalizer fit_action_normalizer(const std::vector<simenv::EpisodeRecord>& demos) {
    return perception::fit_normalizer(
        stack_record_rows(demos, &simenv::EpisodeRecord::actions, simenv::kActionDim, "action"));
}

perception::Normalizer fit_state_normalizer(const std::vector<simenv::EpisodeRecord>& demos) {
    return perception::fit_normalizer(
        stack_record_rows(demos, &simenv::EpisodeRecord::states, simenv::kStateDim, "state"));
}

WindowDataset build_windows(const std::vector<simenv::EpisodeRecord>& demos,
                            const PolicyConfig& cfg,
                            const perception::Normalizer& action_norm,
                            const perception::Normalizer& state_norm) {
    if (demos.empty()) throw ContractError("build_windows: empty demo set");
    const std::size_t H = cfg.obs_horizon;
    const std::size_t Hp = cfg.pred_horizon;
    WindowDataset ds;
    ds.obs_horizon = H;
    ds.fps_points = cfg.fps_points;

    for (const auto& demo : demos) {
        const std::size_t len = demo.actions.size();
        if (demo.states.size() != len || demo.clouds.size() != len)
            throw ContractError("build_windows: record field lengths disagree");
        if (len == 0) continue;  // success at reset: no transitions to learn

        // Per-frame fps reduction and state normalization, shared by every
        // window that references the frame.
        std::vector<Tensor> reduced(len);
        std::vector<Tensor> nstates(len);
        for (std::size_t i = 0; i < len; ++i) {
            reduced[i] = perception::gather_rows(
                demo.clouds[i],
                perception::fps(demo.clouds[i], cfg.fps_points,
                                perception::canonical_start(demo.clouds[i])));
            nstates[i] = perception::normalize(state_norm, demo.states[i]);
        }

        for (std::size_t s = 0; s < len; ++s) {
            Tensor frames({H * cfg.fps_points, 3});
            Tensor states({H * simenv::kStateDim});
            for (std::size_t k = 0; k < H; ++k) {
                // Oldest slot first; history before the episode start repeats
                // frame 0, matching run_episode's startup replication.
                const std::size_t back = H - 1 - k;
                const std::size_t idx = s >= back ? s - back : 0;
                for (std::size_t p = 0; p < cfg.fps_points; ++p)
                    for (std::size_t d = 0; d < 3; ++d)
                        frames.at(k * cfg.fps_points + p, d) = reduced[idx].at(p, d);
                for (std::size_t d = 0; d < simenv::kStateDim; ++d)
                    states[k * simenv::kStateDim + d] = nstates[idx][d];
            }
            Tensor chunk({Hp * simenv::kActionDim});
            for (std::size_t r = 0; r < Hp; ++r) {
                // Past the demo end the final action repeats.
                const std::size_t idx = std::min(s + r, len - 1);
                const Tensor na = perception::normalize(action_norm, demo.actions[idx]);
                for (std::size_t d = 0; d < simenv::kActionDim; ++d)
                    chunk[r * simenv::kActionDim + d] = na[d];
            }
            ds.frames.push_back(std::move(frames));
            ds.states.push_back(std::move(states));
            ds.chunks.push_back(std::move(chunk));
        }
    }
    if (ds.size() == 0) throw ContractError("build_windows: no usable transitions in demos");
    return ds;
}

Tensor build_condition(const TrainedPolicy& pol, const simenv::Observation& obs) {
    const PolicyConfig& cfg = pol.cfg;
    const std::size_t H = cfg.obs_horizon;
    if (obs.clouds.size() != H || obs.states.size() != H)
        throw ContractError("build_condition: observation history must hold exactly the horizon");
    const std::size_t out = pol.encoder.out_dim();

    Tensor frames({H * cfg.fps_points, 3});
    for (std::size_t k = 0; k < H; ++k) {
        const Tensor sub = perception::gather_rows(
            obs.clouds[k], perception::fps(obs.clouds[k], cfg.fps_points,
                                           perception::canonical_start(obs.clouds[k])));
        for (std::size_t p = 0; p < cfg.fps_points; ++p)
            for (std::size_t d = 0; d < 3; ++d)
                frames.at(k * cfg.fps_points + p, d) = sub.at(p, d);
    }
    const Tensor vis = perception::encode_batch(pol.encoder, frames, cfg.fps_points);

    Tensor cond({cfg.cond_dim()});
    for (std::size_t k = 0; k < H; ++k)
        for (std::size_t j = 0; j < out; ++j) cond[k * out + j] = vis.at(k, j);
    const std::size_t base = H * out;
    for (std::size_t k = 0; k < H; ++k) {
        const Tensor ns = perception::normalize(pol.state_norm, obs.states[k]);
        if (ns.size() != simenv::kStateDim)
            throw DimensionError("build_condition: bad state vector");
        for (std::size_t d = 0; d < simenv::kStateDim; ++d)
            cond[base + k * simenv::kStateDim + d] = ns[d];
    }
    return cond;
}

Tensor episode_final_ee(const simenv::TaskSpec& task, const simenv::EpisodeRecord& rec) {
    if (rec.states.empty() || rec.actions.empty())
        throw ContractError("episode_final_ee: record holds no transitions");
    Tensor q({2});
    q[0] = rec.states.back()[0];
    q[1] = rec.states.back()[1];
    simenv::ArmState st;
    st.q = q;
    st.targets = rec.targets;
    st.expert_goal = rec.expert_goal;
    const simenv::ArmState last = simenv::env_step(task, st, rec.actions.back());
    return simenv::forward_kinematics(task, last.q);
}

double midpoint_stall_fraction(const simenv::TaskSpec& task,
                               const std::vector<simenv::EpisodeRecord>& recs,
                               double radius) {
    if (recs.empty()) throw ContractError("midpoint_stall_fraction: no episodes");
    std::size_t stalls = 0;
    for (const auto& rec : recs) {
        if (rec.targets.size() < 2)
            throw ContractError("midpoint_stall_fraction: episode lacks two goals");
        if (rec.states.empty()) continue;  // success at reset cannot stall
        const Tensor ee = episode_final_ee(task, rec);
        const double mx = 0.5 * (rec.targets[0][0] + rec.targets[1][0]);
        const double my = 0.5 * (rec.targets[0][1] + rec.targets[1][1]);
        const bool near_mid = std::hypot(ee[0] - mx, ee[1] - my) < radius;
        bool near_goal = false;
        for (const Tensor& g : rec.targets)
            near_goal = near_goal ||
                        std::hypot(ee[0] - g[0], ee[1] - g[1]) < task.tolerance;
        if (near_mid && !near_goal) ++stalls;
    }
    return static_cast<double>(stalls) / static_cast<double>(recs.size());
}

}  // namespace flowbench::policy
