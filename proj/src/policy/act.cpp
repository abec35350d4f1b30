#include <chrono>
#include <cmath>
#include <limits>

#include "flowbench/error.hpp"
#include "flowbench/policy/policy.hpp"

namespace flowbench::policy {

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

flowmatch::SampleResult run_sampler(const flowmatch::VelocityField& field, const Tensor& x0,
                                    const Tensor& cond, const SamplerSpec& sampler,
                                    const flowmatch::SegmentSchedule& sched) {
    switch (sampler.kind) {
        case SamplerSpec::Kind::onestep:
            return flowmatch::sample_onestep(field, x0, cond);
        case SamplerSpec::Kind::segments:
            return flowmatch::sample_segments(field, x0, cond, sched);
        case SamplerSpec::Kind::euler:
            return flowmatch::sample_euler(field, x0, cond, sampler.euler_steps);
    }
    throw ContractError("corrupt sampler kind");
}

}  // namespace

ActResult act(const TrainedPolicy& pol, const simenv::Observation& obs, Rng& rng,
              const SamplerSpec& sampler, bool use_ema) {
    const auto t0 = std::chrono::steady_clock::now();
    const Tensor cond = build_condition(pol, obs);
    const double cond_s = seconds_since(t0);

    const auto t1 = std::chrono::steady_clock::now();
    const Tensor x0 = rng.gaussian_tensor({pol.cfg.chunk_dim()});
    const flowmatch::MlpVelocityField& field = use_ema ? pol.ema_field : pol.field;
    const flowmatch::SampleResult sr = run_sampler(field, x0, cond, sampler, pol.cfg.schedule);
    const double sample_s = seconds_since(t1);

    Tensor chunk({pol.cfg.pred_horizon, simenv::kActionDim});
    for (std::size_t r = 0; r < pol.cfg.pred_horizon; ++r)
        for (std::size_t d = 0; d < simenv::kActionDim; ++d)
            chunk.at(r, d) = sr.x[r * simenv::kActionDim + d];
    const Tensor denorm = perception::denormalize(pol.action_norm, chunk);

    ActResult out;
    out.actions = Tensor({pol.cfg.exec_horizon, simenv::kActionDim});
    for (std::size_t r = 0; r < pol.cfg.exec_horizon; ++r)
        for (std::size_t d = 0; d < simenv::kActionDim; ++d)
            out.actions.at(r, d) = denorm.at(r, d);
    out.nfe = sr.nfe;
    out.cond_seconds = cond_s;
    out.sample_seconds = sample_s;
    out.total_seconds = seconds_since(t0);
    return out;
}

double ActStats::mean_ms() const {
    return calls == 0 ? 0.0 : 1000.0 * total_s / static_cast<double>(calls);
}

double ActStats::std_ms() const {
    if (calls == 0) return 0.0;
    const double mean = total_s / static_cast<double>(calls);
    const double var = total_sq_s / static_cast<double>(calls) - mean * mean;
    return 1000.0 * std::sqrt(std::max(0.0, var));
}

simenv::PolicyFn as_policy_fn(const TrainedPolicy& pol, const SamplerSpec& sampler,
                              bool use_ema, Rng& rng, ActStats* stats) {
    return [&pol, sampler, use_ema, &rng, stats](const simenv::Observation& obs,
                                                 const simenv::ArmState&) -> Tensor {
        try {
            const ActResult r = act(pol, obs, rng, sampler, use_ema);
            if (stats != nullptr) {
                if (stats->calls == 0)
                    stats->nfe_per_act = r.nfe;
                else if (stats->nfe_per_act != r.nfe)
                    throw ContractError("act NFE changed between calls of one sampler");
                ++stats->calls;
                stats->total_s += r.total_seconds;
                stats->total_sq_s += r.total_seconds * r.total_seconds;
                stats->cond_s += r.cond_seconds;
                stats->sample_s += r.sample_seconds;
            }
            return r.actions;
        } catch (const NumericError&) {
            // Non-finite sampler output: hand the episode a poisoned action so
            // it fails with an error tag instead of aborting the evaluation.
            Tensor bad({1, simenv::kActionDim});
            bad.fill(std::numeric_limits<double>::quiet_NaN());
            return bad;
        }
    };
}

CheckpointEval evaluate(const TrainedPolicy& pol, const simenv::TaskSpec& task,
                        const EvalOptions& opt, std::vector<simenv::EpisodeRecord>* records) {
    if (opt.episodes < 1) throw ContractError("evaluate: episodes must be >= 1");
    Rng master(opt.seed);
    ActStats stats;
    std::size_t wins = 0;
    for (std::size_t i = 0; i < opt.episodes; ++i) {
        Rng env_rng = master.derive(2 * i);
        Rng act_rng = master.derive(2 * i + 1);
        const simenv::PolicyFn fn = as_policy_fn(pol, opt.sampler, opt.use_ema, act_rng, &stats);
        simenv::EpisodeRecord rec = simenv::run_episode(fn, task, env_rng, pol.cfg.obs_horizon);
        wins += rec.success ? 1 : 0;
        if (records != nullptr) records->push_back(std::move(rec));
    }
    CheckpointEval ce;
    ce.success_rate = 100.0 * static_cast<double>(wins) / static_cast<double>(opt.episodes);
    ce.wins = wins;
    ce.episodes = opt.episodes;
    ce.nfe_per_act = stats.nfe_per_act;
    ce.mean_act_ms = stats.mean_ms();
    ce.std_act_ms = stats.std_ms();
    ce.mean_cond_ms = stats.calls == 0 ? 0.0 : 1000.0 * stats.cond_s / stats.calls;
    ce.mean_sample_ms = stats.calls == 0 ? 0.0 : 1000.0 * stats.sample_s / stats.calls;
    return ce;
}

double policy_success_rate(const simenv::PolicyFn& fn, const simenv::TaskSpec& task,
                           std::size_t episodes, std::uint64_t seed,
                           std::size_t obs_horizon) {
    if (episodes < 1) throw ContractError("policy_success_rate: episodes must be >= 1");
    Rng master(seed);
    std::size_t wins = 0;
    for (std::size_t i = 0; i < episodes; ++i) {
        Rng er = master.derive(i);
        wins += simenv::run_episode(fn, task, er, obs_horizon).success ? 1 : 0;
    }
    return 100.0 * static_cast<double>(wins) / static_cast<double>(episodes);
}

TimingReport measure_act_timing(const TrainedPolicy& pol, const simenv::Observation& obs,
                                const SamplerSpec& sampler, bool use_ema,
                                std::size_t warmup, std::size_t reps, std::uint64_t seed) {
    if (reps < 1) throw ContractError("measure_act_timing: reps must be >= 1");
    Rng rng(seed);
    for (std::size_t i = 0; i < warmup; ++i) act(pol, obs, rng, sampler, use_ema);

    double tot = 0.0, tot_sq = 0.0, smp = 0.0, smp_sq = 0.0, cnd = 0.0;
    std::int64_t nfe = -1;
    for (std::size_t i = 0; i < reps; ++i) {
        const ActResult r = act(pol, obs, rng, sampler, use_ema);
        if (nfe < 0)
            nfe = r.nfe;
        else if (nfe != r.nfe)
            throw ContractError("act NFE changed between calls of one sampler");
        tot += r.total_seconds;
        tot_sq += r.total_seconds * r.total_seconds;
        smp += r.sample_seconds;
        smp_sq += r.sample_seconds * r.sample_seconds;
        cnd += r.cond_seconds;
    }
    const double n = static_cast<double>(reps);
    TimingReport tr;
    tr.mean_total_ms = 1000.0 * tot / n;
    tr.std_total_ms = 1000.0 * std::sqrt(std::max(0.0, tot_sq / n - (tot / n) * (tot / n)));
    tr.mean_sample_ms = 1000.0 * smp / n;
    tr.std_sample_ms = 1000.0 * std::sqrt(std::max(0.0, smp_sq / n - (smp / n) * (smp / n)));
    tr.mean_cond_ms = 1000.0 * cnd / n;
    tr.nfe = nfe;
    tr.reps = reps;
    return tr;
}

}  // namespace flowbench::policy
