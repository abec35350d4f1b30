#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "flowbench/error.hpp"
#include "flowbench/numcore/gradcheck.hpp"
#include "flowbench/perception/fps.hpp"
#include "flowbench/policy/policy.hpp"
#include "support/helpers.hpp"

using namespace flowbench;
using policy::PolicyConfig;
using policy::SamplerSpec;
using policy::StepBatch;
using policy::TrainedPolicy;

namespace {

PolicyConfig tiny_config() {
    PolicyConfig cfg;
    cfg.obs_horizon = 2;
    cfg.pred_horizon = 2;
    cfg.exec_horizon = 1;
    cfg.hidden = {16, 16};
    cfg.time_dim = 4;
    cfg.encoder.point_hidden = 8;
    cfg.encoder.point_features = 12;
    cfg.encoder.out_dim = 6;
    cfg.fps_points = 5;
    cfg.batch_size = 4;
    cfg.epochs = 1;
    return cfg;
}

perception::Normalizer unit_normalizer(std::size_t dim, double lo, double hi) {
    perception::Normalizer n;
    n.lo = numcore::Tensor({dim});
    n.hi = numcore::Tensor({dim});
    n.lo.fill(lo);
    n.hi.fill(hi);
    return n;
}

// Hand-assembled policy; `jitter` perturbs the field so the zero-initialized
// output layer does not silence hidden-layer gradients, with the EMA shadow
// captured mid-way so live and target branches genuinely differ.
TrainedPolicy make_policy(const PolicyConfig& cfg, const simenv::TaskSpec& task,
                          std::uint64_t seed, double jitter) {
    TrainedPolicy pol;
    pol.cfg = cfg;
    pol.task = task;
    numcore::Rng rng(seed);
    numcore::Rng enc_rng = rng.derive(11);
    numcore::Rng field_rng = rng.derive(12);
    pol.encoder = perception::CloudEncoder::make(cfg.encoder, enc_rng);
    flowmatch::MlpFieldConfig fcfg{cfg.chunk_dim(), cfg.cond_dim(), cfg.hidden, cfg.time_dim};
    pol.field = flowmatch::MlpVelocityField::make(fcfg, field_rng);

    numcore::Rng jrng = rng.derive(13);
    if (jitter > 0.0)
        for (numcore::Tensor* p : pol.field.params())
            for (std::size_t i = 0; i < p->size(); ++i) (*p)[i] += jitter * jrng.gaussian();
    const auto cparams = static_cast<const flowmatch::MlpVelocityField&>(pol.field).params();
    pol.ema = flowmatch::make_ema(cparams, cfg.ema_decay);
    if (jitter > 0.0)
        for (numcore::Tensor* p : pol.field.params())
            for (std::size_t i = 0; i < p->size(); ++i) (*p)[i] += 0.5 * jitter * jrng.gaussian();
    pol.ema_field = pol.field;
    policy::sync_ema_field(pol);
    pol.action_norm = unit_normalizer(simenv::kActionDim, -1.0, 1.0);
    pol.state_norm = unit_normalizer(simenv::kStateDim, -4.0, 4.0);
    return pol;
}

// Synthetic demonstration with known actions and random clouds.
simenv::EpisodeRecord synthetic_demo(std::size_t len, std::size_t cloud_points,
                                     std::uint64_t seed) {
    numcore::Rng rng(seed);
    simenv::EpisodeRecord rec;
    rec.success = true;
    rec.steps_used = static_cast<int>(len);
    rec.targets = {numcore::Tensor::vec({0.5, 0.3})};
    for (std::size_t i = 0; i < len; ++i) {
        rec.clouds.push_back(rng.gaussian_tensor({cloud_points, 3}));
        rec.states.push_back(rng.uniform_tensor({simenv::kStateDim}, -3.0, 3.0));
        numcore::Tensor a({simenv::kActionDim});
        a[0] = -1.0 + 0.3 * static_cast<double>(i);
        a[1] = 0.9 - 0.4 * static_cast<double>(i);
        rec.actions.push_back(a);
    }
    return rec;
}

StepBatch batch_from_windows(const policy::WindowDataset& ds, const PolicyConfig& cfg,
                             std::size_t count, numcore::Rng& rng) {
    REQUIRE(ds.size() >= count);
    StepBatch sb;
    const std::size_t frame_rows = cfg.obs_horizon * cfg.fps_points;
    sb.frames = numcore::Tensor({count * frame_rows, 3});
    for (std::size_t b = 0; b < count; ++b) {
        for (std::size_t r = 0; r < frame_rows; ++r)
            for (std::size_t d = 0; d < 3; ++d)
                sb.frames.at(b * frame_rows + r, d) = ds.frames[b].at(r, d);
        sb.states.push_back(ds.states[b]);
        sb.chunks.push_back(ds.chunks[b]);
        sb.noises.push_back(rng.gaussian_tensor({cfg.chunk_dim()}));
        const int seg = static_cast<int>(
            rng.uniform_index(static_cast<std::size_t>(cfg.schedule.segments)));
        sb.ts.push_back(rng.uniform(cfg.schedule.sample_lo(seg), cfg.schedule.sample_hi(seg)));
    }
    return sb;
}

std::vector<simenv::EpisodeRecord> expert_demos(const simenv::TaskSpec& task, std::size_t count,
                                                std::uint64_t seed, std::size_t obs_horizon) {
    std::vector<simenv::EpisodeRecord> demos;
    const simenv::PolicyFn expert = simenv::expert_policy(task);
    numcore::Rng master(seed);
    std::uint64_t stream = 0;
    while (demos.size() < count) {
        numcore::Rng er = master.derive(stream++);
        simenv::EpisodeRecord rec = simenv::run_episode(expert, task, er, obs_horizon);
        if (rec.success && !rec.actions.empty()) demos.push_back(std::move(rec));
        REQUIRE(stream < 10 * count + 10);
    }
    return demos;
}

}  // namespace

TEST_CASE("sampler spec parses and round-trips") {
    CHECK(SamplerSpec::parse("onestep").kind == SamplerSpec::Kind::onestep);
    CHECK(SamplerSpec::parse("segments").kind == SamplerSpec::Kind::segments);
    const SamplerSpec e = SamplerSpec::parse("euler-10");
    CHECK(e.kind == SamplerSpec::Kind::euler);
    CHECK(e.euler_steps == 10);
    CHECK(SamplerSpec::parse("euler-3").name() == "euler-3");
    CHECK(SamplerSpec::parse("onestep").name() == "onestep");
    CHECK(SamplerSpec::parse("segments").name() == "segments");
    CHECK_THROWS_AS(SamplerSpec::parse("euler-0"), ConfigError);
    CHECK_THROWS_AS(SamplerSpec::parse("euler-"), ConfigError);
    CHECK_THROWS_AS(SamplerSpec::parse("midpoint"), ConfigError);
    CHECK_THROWS_AS(SamplerSpec::parse(""), ConfigError);
}

TEST_CASE("policy config validation rejects bad fields") {
    PolicyConfig cfg = tiny_config();
    CHECK_NOTHROW(cfg.validate());
    PolicyConfig bad = cfg;
    bad.exec_horizon = bad.pred_horizon + 1;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.exec_horizon = 0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.hidden.clear();
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.time_dim = 3;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.ema_decay = 1.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.eval_sampler = "warp";
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.optim.lr = 0.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    CHECK(cfg.chunk_dim() == cfg.pred_horizon * simenv::kActionDim);
    CHECK(cfg.cond_dim() == cfg.obs_horizon * (cfg.encoder.out_dim + simenv::kStateDim));
}

TEST_CASE("window dataset slides, clamps history, and pads chunks") {
    PolicyConfig cfg = tiny_config();
    cfg.pred_horizon = 4;
    const std::size_t cloud_n = 9;
    const simenv::EpisodeRecord demo = synthetic_demo(3, cloud_n, 71);
    const std::vector<simenv::EpisodeRecord> demos = {demo};
    const perception::Normalizer an = policy::fit_action_normalizer(demos);
    const perception::Normalizer sn = policy::fit_state_normalizer(demos);
    const policy::WindowDataset ds = policy::build_windows(demos, cfg, an, sn);

    CHECK(ds.size() == 3);  // one window per executed action

    // Chunk of the first window: actions 0,1,2 then the final action again.
    const auto norm_action = [&](const numcore::Tensor& a, std::size_t d) {
        const double span = an.hi[d] - an.lo[d];
        return span == 0.0 ? 0.0 : 2.0 * (a[d] - an.lo[d]) / span - 1.0;
    };
    for (std::size_t r = 0; r < 4; ++r) {
        const numcore::Tensor& a = demo.actions[std::min<std::size_t>(r, 2)];
        for (std::size_t d = 0; d < simenv::kActionDim; ++d)
            CHECK(ds.chunks[0][r * simenv::kActionDim + d] == doctest::Approx(norm_action(a, d)).epsilon(1e-12));
    }
    // Last window repeats the final action everywhere.
    for (std::size_t r = 0; r < 4; ++r)
        for (std::size_t d = 0; d < simenv::kActionDim; ++d)
            CHECK(ds.chunks[2][r * simenv::kActionDim + d] ==
                  doctest::Approx(norm_action(demo.actions[2], d)).epsilon(1e-12));

    // First window replicates frame 0 in both history slots.
    const numcore::Tensor red0 =
        perception::gather_rows(
        demo.clouds[0], perception::fps(demo.clouds[0], cfg.fps_points,
                                        perception::canonical_start(demo.clouds[0])));
    for (std::size_t p = 0; p < cfg.fps_points; ++p)
        for (std::size_t d = 0; d < 3; ++d) {
            CHECK(ds.frames[0].at(p, d) == red0.at(p, d));
            CHECK(ds.frames[0].at(cfg.fps_points + p, d) == red0.at(p, d));
        }
    // Second window holds frames 0 then 1, oldest first.
    const numcore::Tensor red1 =
        perception::gather_rows(
        demo.clouds[1], perception::fps(demo.clouds[1], cfg.fps_points,
                                        perception::canonical_start(demo.clouds[1])));
    for (std::size_t p = 0; p < cfg.fps_points; ++p)
        for (std::size_t d = 0; d < 3; ++d) {
            CHECK(ds.frames[1].at(p, d) == red0.at(p, d));
            CHECK(ds.frames[1].at(cfg.fps_points + p, d) == red1.at(p, d));
        }

    // Fitted extremes of the demo actions map to exactly +-1 somewhere.
    double lo = 2.0, hi = -2.0;
    for (const auto& c : ds.chunks)
        for (std::size_t i = 0; i < c.size(); ++i) {
            lo = std::min(lo, c[i]);
            hi = std::max(hi, c[i]);
        }
    CHECK(lo == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(hi == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("window dataset rejects degenerate demo sets") {
    PolicyConfig cfg = tiny_config();
    const perception::Normalizer an = unit_normalizer(simenv::kActionDim, -1.0, 1.0);
    const perception::Normalizer sn = unit_normalizer(simenv::kStateDim, -4.0, 4.0);
    CHECK_THROWS_AS(policy::build_windows({}, cfg, an, sn), ContractError);

    simenv::EpisodeRecord empty;  // success at reset: no transitions
    empty.success = true;
    CHECK_THROWS_AS(policy::build_windows({empty}, cfg, an, sn), ContractError);

    simenv::EpisodeRecord ragged = synthetic_demo(2, 8, 5);
    ragged.actions.pop_back();
    CHECK_THROWS_AS(policy::build_windows({ragged}, cfg, an, sn), ContractError);
}

TEST_CASE("build_condition duplicates blockwise on identical frames and ignores point order") {
    const PolicyConfig cfg = tiny_config();
    const simenv::TaskSpec task;
    const TrainedPolicy pol = make_policy(cfg, task, 311, 0.1);

    numcore::Rng rng(9);
    const numcore::Tensor cloud = rng.gaussian_tensor({11, 3});
    const numcore::Tensor state = rng.uniform_tensor({simenv::kStateDim}, -2.0, 2.0);
    simenv::Observation obs;
    obs.clouds = {cloud, cloud};
    obs.states = {state, state};
    const numcore::Tensor cond = policy::build_condition(pol, obs);
    REQUIRE(cond.size() == cfg.cond_dim());

    const std::size_t out = cfg.encoder.out_dim;
    const numcore::Tensor single = perception::encode_cloud(
        pol.encoder,
        perception::gather_rows(
            cloud, perception::fps(cloud, cfg.fps_points, perception::canonical_start(cloud))));
    for (std::size_t j = 0; j < out; ++j) {
        CHECK(cond[j] == doctest::Approx(single[j]).epsilon(1e-12));
        CHECK(cond[out + j] == doctest::Approx(single[j]).epsilon(1e-12));
    }
    const numcore::Tensor ns = perception::normalize(pol.state_norm, state);
    for (std::size_t d = 0; d < simenv::kStateDim; ++d) {
        CHECK(cond[2 * out + d] == ns[d]);
        CHECK(cond[2 * out + simenv::kStateDim + d] == ns[d]);
    }

    // Point permutation leaves the condition bit-identical.
    std::vector<std::size_t> perm(cloud.rows());
    std::iota(perm.begin(), perm.end(), 0);
    std::reverse(perm.begin(), perm.end());
    const numcore::Tensor shuffled = perception::gather_rows(cloud, perm);
    simenv::Observation obs2;
    obs2.clouds = {shuffled, shuffled};
    obs2.states = {state, state};
    const numcore::Tensor cond2 = policy::build_condition(pol, obs2);
    CHECK(testsupport::max_abs_diff(cond, cond2) == 0.0);

    simenv::Observation missing;
    missing.clouds = {cloud};
    missing.states = {state};
    CHECK_THROWS_AS(policy::build_condition(pol, missing), ContractError);
}

TEST_CASE("composite consistency gradients match finite differences through the encoder") {
    PolicyConfig cfg = tiny_config();
    cfg.method = policy::TrainMethod::consistency;
    const simenv::TaskSpec task;
    TrainedPolicy pol = make_policy(cfg, task, 1234, 0.1);

    const std::vector<simenv::EpisodeRecord> demos = {synthetic_demo(4, 9, 42)};
    const policy::WindowDataset ds =
        policy::build_windows(demos, cfg, pol.action_norm, pol.state_norm);
    numcore::Rng brng(77);
    const StepBatch sb = batch_from_windows(ds, cfg, 3, brng);

    const flowmatch::ConsistencyTargets frozen = policy::capture_targets(pol, sb);
    const policy::StepGrads sg = policy_step_grads(pol, sb);
    CHECK(sg.loss == doctest::Approx(policy::policy_step_value(pol, sb, &frozen)).epsilon(1e-12));

    std::vector<numcore::Tensor*> params = pol.field.params();
    for (numcore::Tensor* p : pol.encoder.params()) params.push_back(p);
    std::vector<numcore::Tensor> analytic = sg.field_grads;
    for (const numcore::Tensor& g : sg.encoder_grads) analytic.push_back(g);

    const double err = numcore::grad_check(
        params, [&] { return policy::policy_step_value(pol, sb, &frozen); }, analytic, 1e-5);
    CHECK(err <= 1e-4);
}

TEST_CASE("composite regression-baseline gradients match finite differences") {
    PolicyConfig cfg = tiny_config();
    cfg.method = policy::TrainMethod::cfm;
    const simenv::TaskSpec task;
    TrainedPolicy pol = make_policy(cfg, task, 991, 0.1);

    const std::vector<simenv::EpisodeRecord> demos = {synthetic_demo(4, 9, 43)};
    const policy::WindowDataset ds =
        policy::build_windows(demos, cfg, pol.action_norm, pol.state_norm);
    numcore::Rng brng(78);
    const StepBatch sb = batch_from_windows(ds, cfg, 3, brng);

    const policy::StepGrads sg = policy_step_grads(pol, sb);
    CHECK(sg.loss == doctest::Approx(policy::policy_step_value(pol, sb, nullptr)).epsilon(1e-12));

    std::vector<numcore::Tensor*> params = pol.field.params();
    for (numcore::Tensor* p : pol.encoder.params()) params.push_back(p);
    std::vector<numcore::Tensor> analytic = sg.field_grads;
    for (const numcore::Tensor& g : sg.encoder_grads) analytic.push_back(g);

    const double err = numcore::grad_check(
        params, [&] { return policy::policy_step_value(pol, sb, nullptr); }, analytic, 1e-5);
    CHECK(err <= 1e-4);
}

TEST_CASE("act with zero field returns the denormalized noise prefix and counts NFE") {
    PolicyConfig cfg = tiny_config();
    cfg.pred_horizon = 3;
    cfg.exec_horizon = 2;
    const simenv::TaskSpec task;
    // No jitter: the freshly initialized field is identically zero.
    TrainedPolicy pol = make_policy(cfg, task, 55, 0.0);
    pol.action_norm = unit_normalizer(simenv::kActionDim, -2.0, 2.0);

    numcore::Rng rng(321);
    simenv::Observation obs;
    obs.clouds = {rng.gaussian_tensor({12, 3}), rng.gaussian_tensor({12, 3})};
    obs.states = {rng.uniform_tensor({simenv::kStateDim}, -1.0, 1.0),
                  rng.uniform_tensor({simenv::kStateDim}, -1.0, 1.0)};

    numcore::Rng act_rng(500);
    const policy::ActResult r =
        policy::act(pol, obs, act_rng, SamplerSpec::parse("onestep"), true);
    CHECK(r.nfe == 1);
    REQUIRE(r.actions.rows() == 2);
    REQUIRE(r.actions.cols() == simenv::kActionDim);

    // Replay the same draw: a zero field leaves the sample at the noise, so
    // the executed prefix is exactly the denormalized first rows.
    numcore::Rng replay(500);
    const numcore::Tensor x0 = replay.gaussian_tensor({cfg.chunk_dim()});
    numcore::Tensor expect({cfg.pred_horizon, simenv::kActionDim});
    for (std::size_t i = 0; i < cfg.chunk_dim(); ++i)
        expect[i] = x0[i];
    const numcore::Tensor dn = perception::denormalize(pol.action_norm, expect);
    for (std::size_t rr = 0; rr < cfg.exec_horizon; ++rr)
        for (std::size_t d = 0; d < simenv::kActionDim; ++d)
            CHECK(r.actions.at(rr, d) == doctest::Approx(dn.at(rr, d)).epsilon(1e-12));

    numcore::Rng rng2(501);
    CHECK(policy::act(pol, obs, rng2, SamplerSpec::parse("segments"), true).nfe ==
          pol.cfg.schedule.segments);
    CHECK(policy::act(pol, obs, rng2, SamplerSpec::parse("euler-7"), true).nfe == 7);
    CHECK(policy::act(pol, obs, rng2, SamplerSpec::parse("euler-7"), false).nfe == 7);
}

TEST_CASE("non-finite field output fails the episode with an error tag") {
    PolicyConfig cfg = tiny_config();
    const simenv::TaskSpec task;
    TrainedPolicy pol = make_policy(cfg, task, 88, 0.1);
    // Poison the output bias so every sampler evaluation throws NumericError.
    std::vector<numcore::Tensor*> params = pol.field.params();
    (*params.back())[0] = std::numeric_limits<double>::quiet_NaN();
    policy::sync_ema_field(pol);
    pol.ema_field.set_params([&] {
        std::vector<numcore::Tensor> vals;
        for (const numcore::Tensor* p :
             static_cast<const flowmatch::MlpVelocityField&>(pol.field).params())
            vals.push_back(*p);
        return vals;
    }());

    numcore::Rng act_rng(7);
    numcore::Rng env_rng(3);
    const simenv::PolicyFn fn =
        policy::as_policy_fn(pol, SamplerSpec::parse("onestep"), false, act_rng);
    const simenv::EpisodeRecord rec = simenv::run_episode(fn, task, env_rng, cfg.obs_horizon);
    CHECK_FALSE(rec.success);
    CHECK(rec.error_tag == "non_finite_action");
}

TEST_CASE("evaluate is deterministic and scores the oracles correctly") {
    simenv::TaskSpec task;
    const std::size_t episodes = 40;

    // Scripted expert wrapped as a policy function.
    const double expert_rate =
        policy::policy_success_rate(simenv::expert_policy(task), task, episodes, 424, 2);
    CHECK(expert_rate >= 99.0);

    // A zero-velocity policy only succeeds if the reset is already solved.
    const simenv::PolicyFn zero_fn = [](const simenv::Observation&, const simenv::ArmState&) {
        numcore::Tensor a({1, simenv::kActionDim});
        return a;
    };
    CHECK(policy::policy_success_rate(zero_fn, task, episodes, 424, 2) <= 10.0);

    // An untrained (zero-field) policy evaluated twice gives identical
    // success fields; only wall times may differ.
    const PolicyConfig cfg = tiny_config();
    const TrainedPolicy pol = make_policy(cfg, task, 10, 0.0);
    policy::EvalOptions opt;
    opt.episodes = 6;
    opt.sampler = SamplerSpec::parse("onestep");
    opt.seed = 91;
    std::vector<simenv::EpisodeRecord> rec_a, rec_b;
    const policy::CheckpointEval a = policy::evaluate(pol, task, opt, &rec_a);
    const policy::CheckpointEval b = policy::evaluate(pol, task, opt, &rec_b);
    CHECK(a.wins == b.wins);
    CHECK(a.success_rate == b.success_rate);
    CHECK(a.nfe_per_act == b.nfe_per_act);
    CHECK(a.episodes == 6);
    REQUIRE(rec_a.size() == rec_b.size());
    for (std::size_t i = 0; i < rec_a.size(); ++i) {
        CHECK(rec_a[i].success == rec_b[i].success);
        CHECK(rec_a[i].steps_used == rec_b[i].steps_used);
        REQUIRE(rec_a[i].actions.size() == rec_b[i].actions.size());
        for (std::size_t k = 0; k < rec_a[i].actions.size(); ++k)
            CHECK(testsupport::max_abs_diff(rec_a[i].actions[k], rec_b[i].actions[k]) == 0.0);
    }
}

TEST_CASE("final score equals the sort oracle over the five best checkpoints") {
    policy::EvalReport report;
    const std::vector<double> rates = {10.0, 80.0, 30.0, 90.0, 50.0, 70.0, 20.0};
    for (std::size_t i = 0; i < rates.size(); ++i) {
        policy::CheckpointEval ce;
        ce.epoch = (i + 1) * 100;
        ce.success_rate = rates[i];
        report.checkpoints.push_back(ce);
    }
    std::vector<double> sorted = rates;
    std::sort(sorted.begin(), sorted.end(), std::greater<double>());
    const double oracle = (sorted[0] + sorted[1] + sorted[2] + sorted[3] + sorted[4]) / 5.0;
    CHECK(report.has_final_score());
    CHECK(report.final_score() == doctest::Approx(oracle).epsilon(1e-15));
    CHECK(report.final_score() == doctest::Approx(64.0).epsilon(1e-15));

    policy::EvalReport small;
    small.checkpoints.assign(4, policy::CheckpointEval{});
    CHECK_FALSE(small.has_final_score());
    CHECK_THROWS_AS(small.final_score(), ContractError);
}

TEST_CASE("episode endpoint and midpoint-stall metric match hand geometry") {
    simenv::TaskSpec task;
    task.variant = simenv::TaskVariant::reach_two_goal;

    // Endpoint: q = (0, 0), action (1, 0) -> q' = (0.05, 0).
    simenv::EpisodeRecord rec;
    rec.targets = {numcore::Tensor::vec({0.5, 0.3}), numcore::Tensor::vec({0.5, -0.3})};
    rec.states = {numcore::Tensor::vec({0.0, 0.0, 1.0, 0.0})};
    rec.actions = {numcore::Tensor::vec({1.0, 0.0})};
    const numcore::Tensor ee = policy::episode_final_ee(task, rec);
    CHECK(ee[0] == doctest::Approx(std::cos(0.05)).epsilon(1e-12));
    CHECK(ee[1] == doctest::Approx(std::sin(0.05)).epsilon(1e-12));

    // Stall construction: goals (0.5, +-0.3), midpoint (0.5, 0). Solve the
    // arm pose whose end effector sits exactly at the midpoint.
    const double r = 0.5;
    const double q1 = std::acos(2.0 * r * r - 1.0);
    const double q0 = std::atan2(0.0, r) - std::atan2(0.5 * std::sin(q1), 0.5 + 0.5 * std::cos(q1));
    const auto rec_at = [&](double px, double py) {
        const double rr = std::hypot(px, py);
        const double e1 = std::acos(std::clamp(2.0 * rr * rr - 1.0, -1.0, 1.0));
        const double e0 =
            std::atan2(py, px) - std::atan2(0.5 * std::sin(e1), 0.5 + 0.5 * std::cos(e1));
        simenv::EpisodeRecord out;
        out.targets = rec.targets;
        out.states = {numcore::Tensor::vec({e0, e1, 0.0, 0.0})};
        out.actions = {numcore::Tensor::vec({0.0, 0.0})};
        return out;
    };
    (void)q0;
    (void)q1;
    std::vector<simenv::EpisodeRecord> recs;
    recs.push_back(rec_at(0.5, 0.0));    // at the midpoint: stall
    recs.push_back(rec_at(0.5, 0.3));    // at a goal: success, not a stall
    recs.push_back(rec_at(-0.4, -0.6));  // far away: not a stall
    recs.push_back(rec_at(0.5, 0.12));   // near midpoint, outside both goals: stall
    const double frac = policy::midpoint_stall_fraction(task, recs, 0.15);
    CHECK(frac == doctest::Approx(0.5).epsilon(1e-15));

    CHECK_THROWS_AS(policy::midpoint_stall_fraction(task, {}, 0.15), ContractError);
    simenv::EpisodeRecord one_goal = rec_at(0.5, 0.0);
    one_goal.targets.pop_back();
    CHECK_THROWS_AS(policy::midpoint_stall_fraction(task, {one_goal}, 0.15), ContractError);
}

TEST_CASE("one-demo training loss decreases on average over the first 50 steps") {
    simenv::TaskSpec task;
    PolicyConfig cfg;
    cfg.obs_horizon = 2;
    cfg.pred_horizon = 8;
    cfg.exec_horizon = 4;
    cfg.hidden = {32, 32};
    cfg.time_dim = 8;
    cfg.encoder.point_hidden = 16;
    cfg.encoder.point_features = 32;
    cfg.encoder.out_dim = 16;
    cfg.fps_points = 8;
    cfg.batch_size = 128;  // one step per epoch on a single demo
    cfg.epochs = 50;
    cfg.eval_every = 1000;  // no checkpoint evals inside this smoke run
    cfg.optim.lr = 1e-3;

    const std::vector<simenv::EpisodeRecord> demos = expert_demos(task, 1, 7001, cfg.obs_horizon);
    numcore::Rng rng(2024);
    const policy::TrainResult res = policy::train_policy(demos, cfg, task, rng);
    REQUIRE(res.epoch_losses.size() == 50);
    const double first =
        std::accumulate(res.epoch_losses.begin(), res.epoch_losses.begin() + 25, 0.0) / 25.0;
    const double second =
        std::accumulate(res.epoch_losses.begin() + 25, res.epoch_losses.end(), 0.0) / 25.0;
    CHECK(second < first);
    CHECK(res.report.checkpoints.empty());
}

TEST_CASE("training is deterministic: same seed gives identical parameters") {
    simenv::TaskSpec task;
    PolicyConfig cfg = tiny_config();
    cfg.pred_horizon = 4;
    cfg.exec_horizon = 2;
    cfg.fps_points = 8;
    cfg.batch_size = 16;
    cfg.epochs = 3;
    cfg.eval_every = 2;
    cfg.eval_episodes = 2;

    const std::vector<simenv::EpisodeRecord> demos = expert_demos(task, 2, 8101, cfg.obs_horizon);

    numcore::Rng rng_a(777);
    numcore::Rng rng_b(777);
    const policy::TrainResult a = policy::train_policy(demos, cfg, task, rng_a);
    const policy::TrainResult b = policy::train_policy(demos, cfg, task, rng_b);

    REQUIRE(a.epoch_losses.size() == b.epoch_losses.size());
    for (std::size_t i = 0; i < a.epoch_losses.size(); ++i)
        CHECK(a.epoch_losses[i] == b.epoch_losses[i]);

    const auto pa = static_cast<const flowmatch::MlpVelocityField&>(a.policy.field).params();
    const auto pb = static_cast<const flowmatch::MlpVelocityField&>(b.policy.field).params();
    REQUIRE(pa.size() == pb.size());
    for (std::size_t i = 0; i < pa.size(); ++i)
        CHECK(testsupport::max_abs_diff(*pa[i], *pb[i]) == 0.0);
    const auto ea = a.policy.encoder.params();
    const auto eb = b.policy.encoder.params();
    REQUIRE(ea.size() == eb.size());
    for (std::size_t i = 0; i < ea.size(); ++i)
        CHECK(testsupport::max_abs_diff(*ea[i], *eb[i]) == 0.0);
    for (std::size_t i = 0; i < a.policy.ema.shadow.size(); ++i)
        CHECK(testsupport::max_abs_diff(a.policy.ema.shadow[i], b.policy.ema.shadow[i]) == 0.0);

    REQUIRE(a.report.checkpoints.size() == b.report.checkpoints.size());
    CHECK(a.report.checkpoints.size() == 1);  // epoch 2 of 3
    CHECK(a.report.checkpoints[0].wins == b.report.checkpoints[0].wins);
    CHECK(a.report.checkpoints[0].epoch == 2);
}
