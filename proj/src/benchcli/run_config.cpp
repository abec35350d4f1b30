#include "flowbench/benchcli/run_config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "flowbench/error.hpp"
#include "json.hpp"

namespace flowbench::benchcli {

using nlohmann::json;

void RunConfig::validate() const {
    task.validate();
    policy.validate();
    policy::SamplerSpec::parse(sampler);
    if (seeds.empty()) throw ConfigError("seeds must be non-empty");
    if (out_dir.empty()) throw ConfigError("out_dir must be non-empty");
}

std::string task_variant_name(simenv::TaskVariant v) {
    switch (v) {
        case simenv::TaskVariant::reach: return "reach";
        case simenv::TaskVariant::reach_two_goal: return "reach_two_goal";
    }
    throw ConfigError("unknown task variant");
}

simenv::TaskVariant parse_task_variant(const std::string& name) {
    if (name == "reach") return simenv::TaskVariant::reach;
    if (name == "reach_two_goal") return simenv::TaskVariant::reach_two_goal;
    throw ConfigError("unknown task variant '" + name + "'");
}

namespace {

void require_known_keys(const json& obj, const std::set<std::string>& known,
                        const std::string& where) {
    if (!obj.is_object()) throw ConfigError(where + ": expected a JSON object");
    for (const auto& item : obj.items()) {
        if (!known.count(item.key())) {
            throw ConfigError(where + ": unknown key '" + item.key() + "'");
        }
    }
}

template <typename T>
void assign(const json& obj, const char* key, T& out, const std::string& where) {
    if (!obj.contains(key)) return;
    try {
        out = obj.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(where + "." + key + ": " + e.what());
    }
}

void parse_task(const json& j, simenv::TaskSpec& task) {
    require_known_keys(j,
                       {"variant", "max_steps", "tolerance", "link1", "link2", "dt",
                        "action_clip", "target_r_min", "target_r_max", "two_goal_min_y",
                        "link_points", "target_points", "target_disc_radius"},
                       "task");
    if (j.contains("variant")) {
        if (!j.at("variant").is_string()) throw ConfigError("task.variant: expected string");
        task.variant = parse_task_variant(j.at("variant").get<std::string>());
    }
    assign(j, "max_steps", task.max_steps, "task");
    assign(j, "tolerance", task.tolerance, "task");
    assign(j, "link1", task.link1, "task");
    assign(j, "link2", task.link2, "task");
    assign(j, "dt", task.dt, "task");
    assign(j, "action_clip", task.action_clip, "task");
    assign(j, "target_r_min", task.target_r_min, "task");
    assign(j, "target_r_max", task.target_r_max, "task");
    assign(j, "two_goal_min_y", task.two_goal_min_y, "task");
    assign(j, "link_points", task.link_points, "task");
    assign(j, "target_points", task.target_points, "task");
    assign(j, "target_disc_radius", task.target_disc_radius, "task");
}

void parse_schedule(const json& j, flowmatch::SegmentSchedule& sched) {
    require_known_keys(j, {"segments", "delta_t", "alpha", "lambda", "epsilon"}, "schedule");
    assign(j, "segments", sched.segments, "schedule");
    assign(j, "delta_t", sched.delta_t, "schedule");
    assign(j, "alpha", sched.alpha, "schedule");
    assign(j, "lambda", sched.lambda, "schedule");
    assign(j, "epsilon", sched.epsilon, "schedule");
}

void parse_encoder(const json& j, perception::CloudEncoderConfig& enc) {
    require_known_keys(j, {"point_hidden", "point_features", "out_dim"}, "policy.encoder");
    assign(j, "point_hidden", enc.point_hidden, "policy.encoder");
    assign(j, "point_features", enc.point_features, "policy.encoder");
    assign(j, "out_dim", enc.out_dim, "policy.encoder");
}

void parse_optim(const json& j, numcore::AdamWConfig& opt) {
    require_known_keys(j, {"lr", "beta1", "beta2", "eps", "weight_decay"}, "policy.optim");
    assign(j, "lr", opt.lr, "policy.optim");
    assign(j, "beta1", opt.beta1, "policy.optim");
    assign(j, "beta2", opt.beta2, "policy.optim");
    assign(j, "eps", opt.eps, "policy.optim");
    assign(j, "weight_decay", opt.weight_decay, "policy.optim");
}

void parse_policy(const json& j, policy::PolicyConfig& pol) {
    require_known_keys(j,
                       {"obs_horizon", "pred_horizon", "exec_horizon", "method", "hidden",
                        "time_dim", "encoder", "fps_points", "optim", "batch_size",
                        "ema_decay", "epochs", "eval_every", "eval_episodes", "demo_count",
                        "eval_sampler", "eval_use_ema"},
                       "policy");
    assign(j, "obs_horizon", pol.obs_horizon, "policy");
    assign(j, "pred_horizon", pol.pred_horizon, "policy");
    assign(j, "exec_horizon", pol.exec_horizon, "policy");
    if (j.contains("method")) {
        if (!j.at("method").is_string()) throw ConfigError("policy.method: expected string");
        pol.method = policy::parse_method(j.at("method").get<std::string>());
    }
    assign(j, "hidden", pol.hidden, "policy");
    assign(j, "time_dim", pol.time_dim, "policy");
    if (j.contains("encoder")) parse_encoder(j.at("encoder"), pol.encoder);
    assign(j, "fps_points", pol.fps_points, "policy");
    if (j.contains("optim")) parse_optim(j.at("optim"), pol.optim);
    assign(j, "batch_size", pol.batch_size, "policy");
    assign(j, "ema_decay", pol.ema_decay, "policy");
    assign(j, "epochs", pol.epochs, "policy");
    assign(j, "eval_every", pol.eval_every, "policy");
    assign(j, "eval_episodes", pol.eval_episodes, "policy");
    assign(j, "demo_count", pol.demo_count, "policy");
    assign(j, "eval_sampler", pol.eval_sampler, "policy");
    assign(j, "eval_use_ema", pol.eval_use_ema, "policy");
}

json task_json(const simenv::TaskSpec& t) {
    return json{{"variant", task_variant_name(t.variant)},
                {"max_steps", t.max_steps},
                {"tolerance", t.tolerance},
                {"link1", t.link1},
                {"link2", t.link2},
                {"dt", t.dt},
                {"action_clip", t.action_clip},
                {"target_r_min", t.target_r_min},
                {"target_r_max", t.target_r_max},
                {"two_goal_min_y", t.two_goal_min_y},
                {"link_points", t.link_points},
                {"target_points", t.target_points},
                {"target_disc_radius", t.target_disc_radius}};
}

json schedule_json(const flowmatch::SegmentSchedule& s) {
    return json{{"segments", s.segments},
                {"delta_t", s.delta_t},
                {"alpha", s.alpha},
                {"lambda", s.lambda},
                {"epsilon", s.epsilon}};
}

json policy_json(const policy::PolicyConfig& p) {
    return json{{"obs_horizon", p.obs_horizon},
                {"pred_horizon", p.pred_horizon},
                {"exec_horizon", p.exec_horizon},
                {"method", policy::method_name(p.method)},
                {"hidden", p.hidden},
                {"time_dim", p.time_dim},
                {"encoder",
                 json{{"point_hidden", p.encoder.point_hidden},
                      {"point_features", p.encoder.point_features},
                      {"out_dim", p.encoder.out_dim}}},
                {"fps_points", p.fps_points},
                {"optim",
                 json{{"lr", p.optim.lr},
                      {"beta1", p.optim.beta1},
                      {"beta2", p.optim.beta2},
                      {"eps", p.optim.eps},
                      {"weight_decay", p.optim.weight_decay}}},
                {"batch_size", p.batch_size},
                {"ema_decay", p.ema_decay},
                {"epochs", p.epochs},
                {"eval_every", p.eval_every},
                {"eval_episodes", p.eval_episodes},
                {"demo_count", p.demo_count},
                {"eval_sampler", p.eval_sampler},
                {"eval_use_ema", p.eval_use_ema}};
}

}  // namespace

RunConfig parse_run_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    require_known_keys(j, {"task", "policy", "schedule", "seeds", "sampler", "out_dir"},
                       "config");
    RunConfig cfg;
    if (j.contains("task")) parse_task(j.at("task"), cfg.task);
    if (j.contains("policy")) parse_policy(j.at("policy"), cfg.policy);
    if (j.contains("schedule")) parse_schedule(j.at("schedule"), cfg.policy.schedule);
    assign(j, "seeds", cfg.seeds, "config");
    assign(j, "sampler", cfg.sampler, "config");
    assign(j, "out_dir", cfg.out_dir, "config");
    cfg.validate();
    return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_run_config(buf.str());
}

std::string serialize_run_config(const RunConfig& cfg) {
    json j{{"task", task_json(cfg.task)},
           {"policy", policy_json(cfg.policy)},
           {"schedule", schedule_json(cfg.policy.schedule)},
           {"seeds", cfg.seeds},
           {"sampler", cfg.sampler},
           {"out_dir", cfg.out_dir}};
    return j.dump(2);
}

std::uint64_t config_hash(const RunConfig& cfg) {
    json j{{"task", task_json(cfg.task)},
           {"policy", policy_json(cfg.policy)},
           {"schedule", schedule_json(cfg.policy.schedule)},
           {"sampler", cfg.sampler}};
    const std::string canon = j.dump();
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : canon) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

}  // namespace flowbench::benchcli
