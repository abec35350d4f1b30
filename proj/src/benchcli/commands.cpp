#include "flowbench/benchcli/commands.hpp"

#include <algorithm>
#include <fstream>

#include "flowbench/error.hpp"
#include "json.hpp"

namespace flowbench::benchcli {

using nlohmann::json;
using numcore::Rng;

namespace {

constexpr std::size_t kDemoRetryBudget = 20;  // failed attempts allowed per demo

json checkpoint_eval_json(const policy::CheckpointEval& ce) {
    return json{{"type", "checkpoint"},
                {"epoch", ce.epoch},
                {"success_rate", ce.success_rate},
                {"wins", ce.wins},
                {"episodes", ce.episodes},
                {"nfe_per_act", ce.nfe_per_act},
                {"train_loss", ce.train_loss},
                {"mean_act_ms", ce.mean_act_ms},
                {"std_act_ms", ce.std_act_ms},
                {"mean_cond_ms", ce.mean_cond_ms},
                {"mean_sample_ms", ce.mean_sample_ms}};
}

// Fixed observation for timing runs: a seeded reset with the history filled
// by replication, exactly like the first policy query of an episode.
simenv::Observation timing_observation(const simenv::TaskSpec& task,
                                       std::size_t obs_horizon, std::uint64_t seed) {
    Rng rng(seed);
    const simenv::ArmState st = simenv::env_reset(task, rng);
    simenv::Observation obs;
    const numcore::Tensor cloud = simenv::render_cloud(task, st);
    const numcore::Tensor state = simenv::observe(task, st);
    for (std::size_t i = 0; i < obs_horizon; ++i) {
        obs.clouds.push_back(cloud);
        obs.states.push_back(state);
    }
    return obs;
}

}  // namespace

std::vector<simenv::EpisodeRecord> generate_demos(const simenv::TaskSpec& task,
                                                  std::size_t count, std::uint64_t seed,
                                                  std::size_t obs_horizon,
                                                  std::ostream& log) {
    if (count == 0) throw ConfigError("demo count must be positive");
    task.validate();
    const simenv::PolicyFn expert = simenv::expert_policy(task);
    Rng master(seed);
    std::vector<simenv::EpisodeRecord> demos;
    demos.reserve(count);
    std::uint64_t attempt = 0;
    for (std::size_t i = 0; i < count; ++i) {
        bool accepted = false;
        for (std::size_t tries = 0; tries < kDemoRetryBudget; ++tries) {
            Rng erng = master.derive(attempt++);
            simenv::EpisodeRecord rec = simenv::run_episode(expert, task, erng, obs_horizon);
            if (rec.success && !rec.actions.empty()) {
                log << "demo " << (i + 1) << "/" << count << ": success in "
                    << rec.steps_used << " steps\n";
                demos.push_back(std::move(rec));
                accepted = true;
                break;
            }
            log << "demo " << (i + 1) << "/" << count << ": expert attempt failed ("
                << (rec.actions.empty() ? "solved at reset" : "timeout") << "), retrying\n";
        }
        if (!accepted) {
            throw ContractError("expert failed demo " + std::to_string(i + 1) + " " +
                                std::to_string(kDemoRetryBudget) +
                                " times; seed=" + std::to_string(seed));
        }
    }
    return demos;
}

void cmd_demo_gen(const RunConfig& cfg, std::uint64_t seed,
                  const std::filesystem::path& out_file, std::ostream& log) {
    cfg.validate();
    auto demos =
        generate_demos(cfg.task, cfg.policy.demo_count, seed, cfg.policy.obs_horizon, log);
    DemoDataset data;
    data.task = cfg.task;
    data.config_hash = config_hash(cfg);
    data.seed = seed;
    data.demos = std::move(demos);
    if (out_file.has_parent_path()) std::filesystem::create_directories(out_file.parent_path());
    save_dataset(out_file, data);
    log << "wrote " << data.demos.size() << " demos to " << out_file.string() << "\n";
}

void cmd_train(const RunConfig& cfg_in, const std::filesystem::path& dataset_file,
               std::uint64_t seed, const std::filesystem::path& out_dir,
               const std::filesystem::path& resume_from, std::ostream& log) {
    RunConfig cfg = cfg_in;
    cfg.validate();
    policy::TrainState state;
    if (!resume_from.empty()) {
        Checkpoint ck = load_checkpoint(resume_from, config_hash(cfg));
        // The stored config owns the run; only a larger epoch target from the
        // caller survives, which extends training (epoch streams are
        // position-independent, so extension is exact).
        const std::size_t requested_epochs = cfg.policy.epochs;
        cfg = ck.config;
        cfg.policy.epochs = std::max(cfg.policy.epochs, requested_epochs);
        seed = ck.seed;
        state = std::move(ck.state);
        state.policy.cfg.epochs = cfg.policy.epochs;
        log << "resuming from " << resume_from.string() << " at epoch "
            << state.epochs_done << "\n";
    }
    DemoDataset data = load_dataset(dataset_file, config_hash(cfg));
    Rng master(seed);
    if (resume_from.empty()) {
        state = policy::init_train_state(data.demos, cfg.policy, cfg.task, master);
    }

    std::filesystem::create_directories(out_dir);
    const auto ck_path = out_dir / "checkpoint.bin";
    std::ofstream tlog(out_dir / "train_log.jsonl", std::ios::binary);
    if (!tlog) throw IoError("cannot open train_log.jsonl for writing");

    std::vector<json> pending_checkpoint_rows;
    const policy::CheckpointFn on_checkpoint = [&](const policy::TrainState& st,
                                                   const policy::CheckpointEval& ce) {
        save_checkpoint(ck_path, cfg, seed, st);
        pending_checkpoint_rows.push_back(checkpoint_eval_json(ce));
        log << "epoch " << ce.epoch << ": eval success " << ce.success_rate << "% ("
            << ce.wins << "/" << ce.episodes << "), train loss " << ce.train_loss << "\n";
    };

    // Epochs run in checkpoint-sized chunks so the log file always holds
    // every completed chunk even if a later one aborts on a numeric error.
    const std::size_t total_epochs = cfg.policy.epochs;
    try {
        while (state.epochs_done < total_epochs) {
            const std::size_t chunk_end =
                std::min(total_epochs, state.epochs_done + cfg.policy.eval_every);
            const std::size_t chunk_begin = state.epochs_done;
            state.policy.cfg.epochs = chunk_end;
            policy::TrainLog part = policy::train_loop(state, data.demos, master, on_checkpoint);
            state.policy.cfg.epochs = total_epochs;
            for (std::size_t e = 0; e < part.epoch_losses.size(); ++e) {
                json row{{"type", "epoch"},
                         {"epoch", chunk_begin + e + 1},
                         {"train_loss", part.epoch_losses[e]}};
                tlog << row.dump() << "\n";
            }
            for (const auto& row : pending_checkpoint_rows) tlog << row.dump() << "\n";
            pending_checkpoint_rows.clear();
            tlog.flush();
        }
    } catch (const NumericError& e) {
        json row{{"type", "abort"}, {"error", e.what()}, {"epochs_done", state.epochs_done}};
        tlog << row.dump() << "\n";
        tlog.flush();
        log << "numeric abort: " << e.what() << "; last good checkpoint retained\n";
        throw;
    }
    // Epoch counts not divisible by the checkpoint cadence still leave a
    // usable final state on disk.
    save_checkpoint(ck_path, cfg, seed, state);
    log << "training finished at epoch " << state.epochs_done << "; checkpoint at "
        << ck_path.string() << "\n";
}

EvalOutput cmd_eval(const std::filesystem::path& ckpt_file,
                    const std::string& sampler_override,
                    const std::vector<std::uint64_t>& seeds_override,
                    const std::filesystem::path& out_file, std::ostream& log) {
    Checkpoint ck = load_checkpoint(ckpt_file);
    policy::TrainedPolicy& pol = ck.state.policy;
    const RunConfig& cfg = ck.config;
    const std::string sampler_name =
        sampler_override.empty() ? cfg.sampler : sampler_override;
    const policy::SamplerSpec sampler = policy::SamplerSpec::parse(sampler_name);
    const std::vector<std::uint64_t>& seeds =
        seeds_override.empty() ? cfg.seeds : seeds_override;
    if (seeds.empty()) throw ConfigError("eval needs at least one seed");

    EvalOutput out;
    out.summary.row = "eval-" + sampler_name;
    out.summary.task = task_variant_name(cfg.task.variant);
    out.summary.method = policy::method_name(cfg.policy.method);
    out.summary.sampler = sampler_name;
    out.summary.seeds = seeds;
    out.summary.epochs = ck.state.epochs_done;
    out.summary.demos = cfg.policy.demo_count;

    for (std::uint64_t s : seeds) {
        policy::EvalOptions eo;
        eo.episodes = cfg.policy.eval_episodes;
        eo.sampler = sampler;
        eo.use_ema = cfg.policy.eval_use_ema;
        eo.seed = Rng(s).derive(1).next_u64();
        const policy::CheckpointEval ce = policy::evaluate(pol, cfg.task, eo);
        out.summary.scores.push_back(ce.success_rate);
        json row{{"type", "eval"},
                 {"seed", s},
                 {"sampler", sampler_name},
                 {"success_rate", ce.success_rate},
                 {"wins", ce.wins},
                 {"episodes", ce.episodes},
                 {"nfe_per_act", ce.nfe_per_act},
                 {"mean_act_ms", ce.mean_act_ms},
                 {"std_act_ms", ce.std_act_ms},
                 {"mean_cond_ms", ce.mean_cond_ms},
                 {"mean_sample_ms", ce.mean_sample_ms}};
        out.jsonl.push_back(row.dump());
        log << "seed " << s << ": success " << ce.success_rate << "% (" << ce.wins << "/"
            << ce.episodes << "), NFE " << ce.nfe_per_act << "\n";
    }
    finalize_scores(out.summary);

    // Timing: the requested sampler for the row fields, plus the fixed
    // euler-10 / one-step pair behind the speedup ratio.
    const simenv::Observation obs =
        timing_observation(cfg.task, cfg.policy.obs_horizon, seeds[0]);
    const bool use_ema = cfg.policy.eval_use_ema;
    const policy::TimingReport tr =
        policy::measure_act_timing(pol, obs, sampler, use_ema, 20, 200, seeds[0]);
    out.summary.nfe = tr.nfe;
    out.summary.act_mean_ms = tr.mean_total_ms;
    out.summary.act_std_ms = tr.std_total_ms;
    out.summary.sample_mean_ms = tr.mean_sample_ms;
    out.summary.cond_mean_ms = tr.mean_cond_ms;
    const policy::TimingReport euler10 = policy::measure_act_timing(
        pol, obs, policy::SamplerSpec::parse("euler-10"), use_ema, 20, 200, seeds[0]);
    const policy::TimingReport onestep = policy::measure_act_timing(
        pol, obs, policy::SamplerSpec::parse("onestep"), use_ema, 20, 200, seeds[0]);
    out.speedup = euler10.mean_sample_ms / onestep.mean_sample_ms;

    json summary = json::parse(result_row_json(out.summary));
    summary["type"] = "summary";
    summary["speedup"] = out.speedup;
    summary["euler10_sample_ms"] = euler10.mean_sample_ms;
    summary["onestep_sample_ms"] = onestep.mean_sample_ms;
    out.jsonl.push_back(summary.dump());

    if (!out_file.empty()) {
        if (out_file.has_parent_path()) {
            std::filesystem::create_directories(out_file.parent_path());
        }
        std::ofstream f(out_file, std::ios::binary);
        if (!f) throw IoError("cannot open " + out_file.string() + " for writing");
        for (const auto& line : out.jsonl) f << line << "\n";
    }
    return out;
}

std::vector<ResultRow> cmd_bench(const RunConfig& cfg, const std::filesystem::path& out_dir,
                                 std::ostream& log) {
    cfg.validate();
    if (cfg.policy.epochs / cfg.policy.eval_every < 5) {
        throw ConfigError("bench needs at least 5 checkpoints (epochs / eval_every >= 5)");
    }
    std::filesystem::create_directories(out_dir);
    const std::string task_name = task_variant_name(cfg.task.variant);
    const std::uint64_t demo_seed = cfg.seeds.front();

    log << "generating " << cfg.policy.demo_count << " demos (seed " << demo_seed << ")\n";
    const auto demo_file = out_dir / "demos.bin";
    {
        RunConfig demo_cfg = cfg;
        cmd_demo_gen(demo_cfg, demo_seed, demo_file, log);
    }
    // Training consumes the file image so a bench run is reproducible from
    // its own artifacts.
    const DemoDataset data = load_dataset(demo_file, config_hash(cfg));

    auto blank_row = [&](const std::string& row, const std::string& method,
                         const std::string& sampler, std::int64_t nfe) {
        ResultRow r;
        r.row = row;
        r.task = task_name;
        r.method = method;
        r.sampler = sampler;
        r.nfe = nfe;
        r.seeds = cfg.seeds;
        r.epochs = cfg.policy.epochs;
        r.demos = data.demos.size();
        return r;
    };
    ResultRow fp_one = blank_row("flowpolicy-onestep", "consistency", "onestep", 1);
    ResultRow fp_seg = blank_row("flowpolicy-segments", "consistency", "segments",
                                 cfg.policy.schedule.segments);
    ResultRow cfm_row = blank_row("cfm-euler10", "cfm", "euler-10", 10);

    auto write_cell_log = [](const std::filesystem::path& dir,
                             const std::vector<double>& losses,
                             const std::vector<policy::CheckpointEval>& evals) {
        std::ofstream f(dir / "train_log.jsonl", std::ios::binary);
        for (std::size_t e = 0; e < losses.size(); ++e) {
            f << json{{"type", "epoch"}, {"epoch", e + 1}, {"train_loss", losses[e]}}.dump()
              << "\n";
        }
        for (const auto& ce : evals) f << checkpoint_eval_json(ce).dump() << "\n";
    };

    auto fill_timing = [&](ResultRow& row, const policy::TrainedPolicy& pol) {
        const simenv::Observation obs =
            timing_observation(cfg.task, cfg.policy.obs_horizon, demo_seed);
        const policy::TimingReport tr = policy::measure_act_timing(
            pol, obs, policy::SamplerSpec::parse(row.sampler), cfg.policy.eval_use_ema, 20,
            200, demo_seed);
        if (tr.nfe != row.nfe) {
            throw ContractError(row.row + ": NFE " + std::to_string(tr.nfe) +
                                " != expected " + std::to_string(row.nfe));
        }
        row.act_mean_ms = tr.mean_total_ms;
        row.act_std_ms = tr.std_total_ms;
        row.sample_mean_ms = tr.mean_sample_ms;
        row.cond_mean_ms = tr.mean_cond_ms;
    };

    // FlowPolicy cells: one training per seed serves both sampler rows.
    try {
        RunConfig fp_cfg = cfg;
        fp_cfg.policy.method = policy::TrainMethod::consistency;
        fp_cfg.policy.eval_sampler = "onestep";
        fp_cfg.sampler = "onestep";
        for (std::uint64_t s : cfg.seeds) {
            const auto cell_dir = out_dir / "cells" / ("flowpolicy-seed" + std::to_string(s));
            std::filesystem::create_directories(cell_dir);
            policy::EvalReport seg_report;
            const policy::CheckpointFn cb = [&](const policy::TrainState& st,
                                                const policy::CheckpointEval& ce) {
                save_checkpoint(cell_dir / "checkpoint.bin", fp_cfg, s, st);
                policy::EvalOptions eo;
                eo.episodes = fp_cfg.policy.eval_episodes;
                eo.sampler = policy::SamplerSpec::parse("segments");
                eo.use_ema = fp_cfg.policy.eval_use_ema;
                eo.seed = Rng(s).derive(2000000 + ce.epoch).next_u64();
                policy::CheckpointEval seg_ce = policy::evaluate(st.policy, cfg.task, eo);
                seg_ce.epoch = ce.epoch;
                seg_ce.train_loss = ce.train_loss;
                seg_report.checkpoints.push_back(seg_ce);
                log << "flowpolicy seed " << s << " epoch " << ce.epoch << ": onestep "
                    << ce.success_rate << "%, segments " << seg_ce.success_rate << "%\n";
            };
            Rng rng(s);
            const policy::TrainResult res =
                policy::train_policy(data.demos, fp_cfg.policy, cfg.task, rng, cb);
            write_cell_log(cell_dir, res.epoch_losses, res.report.checkpoints);
            fp_one.scores.push_back(res.report.final_score());
            fp_seg.scores.push_back(seg_report.final_score());
            if (s == cfg.seeds.back()) {
                fill_timing(fp_one, res.policy);
                fill_timing(fp_seg, res.policy);
            }
        }
        finalize_scores(fp_one);
        finalize_scores(fp_seg);
    } catch (const std::exception& e) {
        log << "flowpolicy cell failed: " << e.what() << "\n";
        fp_one.error = e.what();
        fp_seg.error = e.what();
    }

    // Regression baseline trained on the same dataset and seeds.
    try {
        RunConfig cfm_cfg = cfg;
        cfm_cfg.policy.method = policy::TrainMethod::cfm;
        cfm_cfg.policy.eval_sampler = "euler-10";
        cfm_cfg.sampler = "euler-10";
        for (std::uint64_t s : cfg.seeds) {
            const auto cell_dir = out_dir / "cells" / ("cfm-seed" + std::to_string(s));
            std::filesystem::create_directories(cell_dir);
            const policy::CheckpointFn cb = [&](const policy::TrainState& st,
                                                const policy::CheckpointEval& ce) {
                save_checkpoint(cell_dir / "checkpoint.bin", cfm_cfg, s, st);
                log << "cfm seed " << s << " epoch " << ce.epoch << ": euler-10 "
                    << ce.success_rate << "%\n";
            };
            Rng rng(s);
            const policy::TrainResult res =
                policy::train_policy(data.demos, cfm_cfg.policy, cfg.task, rng, cb);
            write_cell_log(cell_dir, res.epoch_losses, res.report.checkpoints);
            cfm_row.scores.push_back(res.report.final_score());
            if (s == cfg.seeds.back()) fill_timing(cfm_row, res.policy);
        }
        finalize_scores(cfm_row);
    } catch (const std::exception& e) {
        log << "cfm cell failed: " << e.what() << "\n";
        cfm_row.error = e.what();
    }

    std::vector<ResultRow> rows{fp_one, fp_seg, cfm_row};
    write_results(out_dir, rows);
    log << "results written to " << out_dir.string() << "\n";
    return rows;
}

}  // namespace flowbench::benchcli
