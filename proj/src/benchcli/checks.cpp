#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <utility>
#include <vector>

#include "flowbench/benchcli/commands.hpp"
#include "flowbench/error.hpp"
#include "flowbench/flowmatch/losses.hpp"
#include "flowbench/flowmatch/samplers.hpp"
#include "flowbench/numcore/gradcheck.hpp"
#include "flowbench/perception/normalizer.hpp"

namespace flowbench::benchcli {

using numcore::Rng;
using numcore::Tensor;

namespace {

bool report(std::ostream& out, const char* name, double value, double bound) {
    const bool ok = std::isfinite(value) && value <= bound;
    char line[160];
    std::snprintf(line, sizeof(line), "[%s] %-44s %.3e (bound %.0e)\n", ok ? "PASS" : "FAIL",
                  name, value, bound);
    out << line;
    return ok;
}

std::vector<flowmatch::CouplingSample> random_batch(std::size_t n, std::size_t dim,
                                                    std::size_t cond_dim,
                                                    const flowmatch::SegmentSchedule& sched,
                                                    Rng& rng) {
    std::vector<flowmatch::CouplingSample> batch(n);
    for (auto& s : batch) {
        s.x0 = rng.gaussian_tensor({dim});
        s.x1 = rng.gaussian_tensor({dim});
        if (cond_dim > 0) s.cond = rng.gaussian_tensor({cond_dim});
        const int seg = static_cast<int>(rng.uniform_index(sched.segments));
        s.t = rng.uniform(sched.sample_lo(seg), sched.sample_hi(seg));
    }
    return batch;
}

double field_gradcheck_cfm(Rng& rng) {
    flowmatch::MlpFieldConfig fcfg;
    fcfg.sample_dim = 3;
    fcfg.cond_dim = 4;
    fcfg.hidden = {8, 8};
    fcfg.time_dim = 4;
    auto field = flowmatch::MlpVelocityField::make(fcfg, rng);
    flowmatch::SegmentSchedule sched;
    const auto batch = random_batch(6, fcfg.sample_dim, fcfg.cond_dim, sched, rng);
    const auto res = flowmatch::cfm_loss(field, batch);
    const auto fn = [&]() { return flowmatch::cfm_loss_value(field, batch); };
    return numcore::grad_check(field.params(), fn, res.grads, 1e-5);
}

double field_gradcheck_consistency(int segments, Rng& rng) {
    flowmatch::MlpFieldConfig fcfg;
    fcfg.sample_dim = 3;
    fcfg.cond_dim = 4;
    fcfg.hidden = {8, 8};
    fcfg.time_dim = 4;
    auto field = flowmatch::MlpVelocityField::make(fcfg, rng);
    flowmatch::SegmentSchedule sched;
    sched.segments = segments;
    // A jittered EMA shadow keeps the target branch distinct from the live
    // one, which is the case the stop-gradient matters for.
    const std::vector<const Tensor*> const_params = std::as_const(field).params();
    auto ema = flowmatch::make_ema(const_params, 0.95);
    for (auto& t : ema.shadow) {
        const Tensor noise = rng.gaussian_tensor(t.shape());
        numcore::axpy(t, 0.05, noise);
    }
    const auto batch = random_batch(6, fcfg.sample_dim, fcfg.cond_dim, sched, rng);
    const auto targets = flowmatch::consistency_targets(field, ema, sched, batch);
    const auto res = flowmatch::consistency_loss_given_targets(field, sched, batch, targets);
    const auto fn = [&]() {
        return flowmatch::consistency_loss_given_targets(field, sched, batch, targets).value;
    };
    return numcore::grad_check(field.params(), fn, res.grads, 1e-5);
}

double composite_gradcheck(Rng& rng) {
    simenv::TaskSpec task;
    task.link_points = 12;
    task.target_points = 8;

    policy::PolicyConfig cfg;
    cfg.obs_horizon = 2;
    cfg.pred_horizon = 2;
    cfg.exec_horizon = 1;
    cfg.hidden = {16, 16};
    cfg.time_dim = 4;
    cfg.encoder = {8, 12, 6};
    cfg.fps_points = 5;
    cfg.batch_size = 3;
    cfg.epochs = 1;
    cfg.demo_count = 1;

    auto demos = generate_demos(task, 1, rng.next_u64(), cfg.obs_horizon, std::cerr);
    Rng init_rng(rng.next_u64());
    policy::TrainedPolicy pol = policy::init_policy(cfg, task, demos, init_rng);
    const policy::WindowDataset windows =
        policy::build_windows(demos, cfg, pol.action_norm, pol.state_norm);

    const std::size_t n = std::min<std::size_t>(3, windows.size());
    policy::StepBatch batch;
    const std::size_t frame_rows = cfg.obs_horizon * cfg.fps_points;
    batch.frames = Tensor({n * frame_rows, 3});
    for (std::size_t b = 0; b < n; ++b) {
        for (std::size_t r = 0; r < frame_rows; ++r) {
            for (std::size_t c = 0; c < 3; ++c) {
                batch.frames.at(b * frame_rows + r, c) = windows.frames[b].at(r, c);
            }
        }
        batch.states.push_back(windows.states[b]);
        batch.chunks.push_back(windows.chunks[b]);
        batch.noises.push_back(rng.gaussian_tensor({cfg.chunk_dim()}));
        const int seg = static_cast<int>(rng.uniform_index(cfg.schedule.segments));
        batch.ts.push_back(rng.uniform(cfg.schedule.sample_lo(seg), cfg.schedule.sample_hi(seg)));
    }

    const auto targets = policy::capture_targets(pol, batch);
    const auto grads = policy::policy_step_grads(pol, batch);
    std::vector<Tensor*> params = pol.field.params();
    for (Tensor* p : pol.encoder.params()) params.push_back(p);
    std::vector<Tensor> analytic = grads.field_grads;
    analytic.insert(analytic.end(), grads.encoder_grads.begin(), grads.encoder_grads.end());
    const auto fn = [&]() { return policy::policy_step_value(pol, batch, &targets); };
    return numcore::grad_check(params, fn, analytic, 1e-5);
}

}  // namespace

bool run_gradcheck(std::uint64_t seed, std::ostream& out) {
    Rng rng(seed);
    bool ok = true;
    ok &= report(out, "cfm regression gradient", field_gradcheck_cfm(rng), 1e-4);
    ok &= report(out, "consistency gradient (1 segment)",
                 field_gradcheck_consistency(1, rng), 1e-4);
    ok &= report(out, "consistency gradient (2 segments)",
                 field_gradcheck_consistency(2, rng), 1e-4);
    ok &= report(out, "encoder-through-policy composite gradient", composite_gradcheck(rng),
                 1e-4);
    return ok;
}

bool run_oracle_tests(std::uint64_t seed, std::ostream& out) {
    Rng rng(seed);
    bool ok = true;

    // An exact solution of the objective: the straight-line field toward a
    // fixed target is consistent across every segment, so its loss vanishes.
    {
        const Tensor target = Tensor::vec({0.5, -0.3});
        const flowmatch::FuncField field([&](double t, const Tensor& x, const Tensor&) {
            Tensor v({x.size()});
            for (std::size_t i = 0; i < x.size(); ++i) {
                v[i] = (target[i % 2] - x[i]) / (1.0 - t);
            }
            return v;
        });
        for (int segments : {1, 2}) {
            flowmatch::SegmentSchedule sched;
            sched.segments = segments;
            std::vector<flowmatch::CouplingSample> batch(16);
            for (auto& s : batch) {
                s.x0 = rng.gaussian_tensor({2});
                s.x1 = target;
                const int seg = static_cast<int>(rng.uniform_index(segments));
                s.t = rng.uniform(sched.sample_lo(seg), sched.sample_hi(seg));
            }
            const double loss = flowmatch::consistency_fm_loss_value(field, field, sched, batch);
            const char* name = segments == 1 ? "analytic-field zero loss (1 segment)"
                                             : "analytic-field zero loss (2 segments)";
            ok &= report(out, name, loss, 1e-10);
        }
    }

    // Interpolation endpoints and the f-map jump against hand arithmetic.
    {
        double worst = 0.0;
        for (int trial = 0; trial < 50; ++trial) {
            const Tensor x0 = rng.gaussian_tensor({3});
            const Tensor x1 = rng.gaussian_tensor({3});
            const Tensor at0 = flowmatch::interpolate(x0, x1, 0.0);
            const Tensor at1 = flowmatch::interpolate(x0, x1, 1.0);
            for (std::size_t i = 0; i < 3; ++i) {
                worst = std::max(worst, std::abs(at0[i] - x0[i]));
                worst = std::max(worst, std::abs(at1[i] - x1[i]));
            }
        }
        ok &= report(out, "interpolation endpoints", worst, 1e-12);

        const Tensor c = rng.gaussian_tensor({3});
        const flowmatch::FuncField const_field(
            [&](double, const Tensor&, const Tensor&) { return c; });
        double worst_f = 0.0;
        for (int trial = 0; trial < 50; ++trial) {
            const int K = 1 + static_cast<int>(rng.uniform_index(3));
            const int seg = static_cast<int>(rng.uniform_index(K));
            const double lo = static_cast<double>(seg) / K;
            const double hi = static_cast<double>(seg + 1) / K;
            const double t = rng.uniform(lo, hi - 1e-3);
            const Tensor x = rng.gaussian_tensor({3});
            const Tensor fx = flowmatch::f_map(const_field, t, x, {}, seg, K);
            for (std::size_t i = 0; i < 3; ++i) {
                worst_f = std::max(worst_f, std::abs(fx[i] - (x[i] + (hi - t) * c[i])));
            }
        }
        ok &= report(out, "f-map jump arithmetic", worst_f, 1e-12);

        // Constant velocity moves every sampler of unit span by exactly c.
        double worst_s = 0.0;
        flowmatch::SegmentSchedule sched;
        sched.segments = 2;
        const Tensor x0 = rng.gaussian_tensor({3});
        const Tensor one = flowmatch::sample_onestep(const_field, x0, {}).x;
        const Tensor segs = flowmatch::sample_segments(const_field, x0, {}, sched).x;
        const Tensor eul = flowmatch::sample_euler(const_field, x0, {}, 10).x;
        for (std::size_t i = 0; i < 3; ++i) {
            const double want = x0[i] + c[i];
            worst_s = std::max(worst_s, std::abs(one[i] - want));
            worst_s = std::max(worst_s, std::abs(segs[i] - want));
            worst_s = std::max(worst_s, std::abs(eul[i] - want));
        }
        ok &= report(out, "constant-field transport identity", worst_s, 1e-12);
    }

    // EMA recurrence against its closed form.
    {
        const double decay = 0.9;
        Tensor p = rng.gaussian_tensor({4});
        auto ema = flowmatch::make_ema({&p}, decay);
        const Tensor s0 = ema.shadow[0];
        std::vector<Tensor> history;
        for (int k = 0; k < 5; ++k) {
            p = rng.gaussian_tensor({4});
            history.push_back(p);
            flowmatch::ema_update(ema, {&p});
        }
        double worst = 0.0;
        for (std::size_t i = 0; i < 4; ++i) {
            double want = s0[i];
            for (const auto& h : history) want = decay * want + (1.0 - decay) * h[i];
            worst = std::max(worst, std::abs(ema.shadow[0][i] - want));
        }
        ok &= report(out, "EMA recurrence closed form", worst, 1e-12);
    }

    // Normalizer round-trip and extreme mapping.
    {
        const Tensor rows = rng.gaussian_tensor({32, 5});
        const auto norm = perception::fit_normalizer(rows);
        const Tensor back = perception::denormalize(norm, perception::normalize(norm, rows));
        double worst = 0.0;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            worst = std::max(worst, std::abs(back[i] - rows[i]));
        }
        ok &= report(out, "normalizer round-trip", worst, 1e-12);
    }

    return ok;
}

}  // namespace flowbench::benchcli
