#include <algorithm>
#include <numeric>
#include <utility>

#include "flowbench/error.hpp"
#include "flowbench/numcore/mlp.hpp"
#include "flowbench/policy/policy.hpp"

namespace flowbench::policy {

using flowmatch::CouplingSample;
using flowmatch::LossResult;

void sync_ema_field(TrainedPolicy& pol) { pol.ema_field.set_params(pol.ema.shadow); }

TrainedPolicy init_policy(const PolicyConfig& cfg, const simenv::TaskSpec& task,
                          const std::vector<simenv::EpisodeRecord>& demos, Rng& rng) {
    cfg.validate();
    task.validate();
    if (demos.empty()) throw ContractError("init_policy: empty demo set");

    TrainedPolicy pol;
    pol.cfg = cfg;
    pol.task = task;
    pol.action_norm = fit_action_normalizer(demos);
    pol.state_norm = fit_state_normalizer(demos);

    Rng enc_rng = rng.derive(11);
    Rng field_rng = rng.derive(12);
    pol.encoder = perception::CloudEncoder::make(cfg.encoder, enc_rng);

    flowmatch::MlpFieldConfig fcfg;
    fcfg.sample_dim = cfg.chunk_dim();
    fcfg.cond_dim = cfg.cond_dim();
    fcfg.hidden = cfg.hidden;
    fcfg.time_dim = cfg.time_dim;
    pol.field = flowmatch::MlpVelocityField::make(fcfg, field_rng);

    const auto cparams = static_cast<const flowmatch::MlpVelocityField&>(pol.field).params();
    pol.ema = flowmatch::make_ema(cparams, cfg.ema_decay);
    pol.ema_field = pol.field;
    return pol;
}

namespace {

// Builds the coupling batch at the current parameters: encoder forward over
// all frames, then per-sample [visual | state] condition rows.
std::vector<CouplingSample> assemble_coupling(const TrainedPolicy& pol, const StepBatch& batch,
                                              perception::EncoderCache* cache) {
    const PolicyConfig& cfg = pol.cfg;
    const std::size_t n = batch.chunks.size();
    if (n == 0) throw ContractError("policy step: empty batch");
    if (batch.states.size() != n || batch.noises.size() != n || batch.ts.size() != n)
        throw ContractError("policy step: batch field lengths disagree");
    const std::size_t H = cfg.obs_horizon;
    if (batch.frames.rows() != n * H * cfg.fps_points)
        throw DimensionError("policy step: frame rows do not match the batch");

    const Tensor vis = perception::encode_batch(pol.encoder, batch.frames, cfg.fps_points, cache);
    const std::size_t out = pol.encoder.out_dim();
    const std::size_t base = H * out;

    std::vector<CouplingSample> cs(n);
    for (std::size_t b = 0; b < n; ++b) {
        Tensor cond({cfg.cond_dim()});
        for (std::size_t k = 0; k < H; ++k)
            for (std::size_t j = 0; j < out; ++j) cond[k * out + j] = vis.at(b * H + k, j);
        if (batch.states[b].size() != H * simenv::kStateDim)
            throw DimensionError("policy step: bad state row");
        for (std::size_t d = 0; d < H * simenv::kStateDim; ++d) cond[base + d] = batch.states[b][d];
        cs[b] = CouplingSample{batch.noises[b], batch.chunks[b], batch.ts[b], std::move(cond)};
    }
    return cs;
}

}  // namespace

StepGrads policy_step_grads(const TrainedPolicy& pol, const StepBatch& batch) {
    perception::EncoderCache cache;
    const std::vector<CouplingSample> cs = assemble_coupling(pol, batch, &cache);

    LossResult res = pol.cfg.method == TrainMethod::consistency
                         ? flowmatch::consistency_fm_loss(pol.field, pol.ema, pol.cfg.schedule, cs)
                         : flowmatch::cfm_loss(pol.field, cs);

    StepGrads sg;
    sg.loss = res.value;
    sg.field_grads = std::move(res.grads);

    const std::size_t n = cs.size();
    const std::size_t H = pol.cfg.obs_horizon;
    const std::size_t out = pol.encoder.out_dim();
    Tensor dout({n * H, out});
    for (std::size_t b = 0; b < n; ++b)
        for (std::size_t k = 0; k < H; ++k)
            for (std::size_t j = 0; j < out; ++j)
                dout.at(b * H + k, j) = res.cond_grads.at(b, k * out + j);
    sg.encoder_grads = numcore::zero_grads_like(pol.encoder.params()).grads;
    perception::encoder_backward(pol.encoder, cache, dout, sg.encoder_grads);
    return sg;
}

flowmatch::ConsistencyTargets capture_targets(const TrainedPolicy& pol, const StepBatch& batch) {
    const std::vector<CouplingSample> cs = assemble_coupling(pol, batch, nullptr);
    return flowmatch::consistency_targets(pol.field, pol.ema, pol.cfg.schedule, cs);
}

double policy_step_value(const TrainedPolicy& pol, const StepBatch& batch,
                         const flowmatch::ConsistencyTargets* frozen) {
    const std::vector<CouplingSample> cs = assemble_coupling(pol, batch, nullptr);
    if (frozen != nullptr)
        return flowmatch::consistency_loss_given_targets(pol.field, pol.cfg.schedule, cs, *frozen)
            .value;
    return flowmatch::cfm_loss_value(pol.field, cs);
}

double EvalReport::final_score() const {
    if (!has_final_score())
        throw ContractError("final score requires at least five checkpoints");
    std::vector<double> rates;
    rates.reserve(checkpoints.size());
    for (const auto& c : checkpoints) rates.push_back(c.success_rate);
    std::partial_sort(rates.begin(), rates.begin() + 5, rates.end(), std::greater<double>());
    return (rates[0] + rates[1] + rates[2] + rates[3] + rates[4]) / 5.0;
}

TrainState init_train_state(const std::vector<simenv::EpisodeRecord>& demos,
                            const PolicyConfig& cfg, const simenv::TaskSpec& task, Rng& rng) {
    TrainState st;
    st.policy = init_policy(cfg, task, demos, rng);
    std::vector<Tensor*> params = st.policy.field.params();
    for (Tensor* p : st.policy.encoder.params()) params.push_back(p);
    st.opt = numcore::make_adamw(params, cfg.optim);
    st.epochs_done = 0;
    return st;
}

TrainLog train_loop(TrainState& state, const std::vector<simenv::EpisodeRecord>& demos,
                    Rng& rng, const CheckpointFn& on_checkpoint) {
    TrainLog result;
    TrainedPolicy& pol = state.policy;
    const PolicyConfig& cfg = pol.cfg;

    const WindowDataset ds = build_windows(demos, cfg, pol.action_norm, pol.state_norm);
    const std::size_t n = ds.size();
    const std::size_t H = cfg.obs_horizon;
    const std::size_t frame_rows = H * cfg.fps_points;

    std::vector<Tensor*> params = pol.field.params();
    for (Tensor* p : pol.encoder.params()) params.push_back(p);
    numcore::OptimizerState& opt = state.opt;
    const auto field_cparams =
        static_cast<const flowmatch::MlpVelocityField&>(pol.field).params();

    std::vector<std::size_t> order(n);

    for (std::size_t epoch = state.epochs_done; epoch < cfg.epochs; ++epoch) {
        // The visit order restarts from the identity so each epoch is a pure
        // function of its derived stream; resumed runs then retrace exactly.
        std::iota(order.begin(), order.end(), 0);
        Rng erng = rng.derive(100 + epoch);
        for (std::size_t i = n; i > 1; --i)
            std::swap(order[i - 1], order[erng.uniform_index(i)]);

        double epoch_loss = 0.0;
        std::size_t steps = 0;
        for (std::size_t start = 0; start < n; start += cfg.batch_size) {
            const std::size_t bs = std::min(cfg.batch_size, n - start);
            StepBatch sb;
            sb.frames = Tensor({bs * frame_rows, 3});
            sb.states.reserve(bs);
            sb.chunks.reserve(bs);
            sb.noises.reserve(bs);
            sb.ts.reserve(bs);
            for (std::size_t b = 0; b < bs; ++b) {
                const std::size_t w = order[start + b];
                for (std::size_t r = 0; r < frame_rows; ++r)
                    for (std::size_t d = 0; d < 3; ++d)
                        sb.frames.at(b * frame_rows + r, d) = ds.frames[w].at(r, d);
                sb.states.push_back(ds.states[w]);
                sb.chunks.push_back(ds.chunks[w]);
                sb.noises.push_back(erng.gaussian_tensor({cfg.chunk_dim()}));
                const int seg = static_cast<int>(
                    erng.uniform_index(static_cast<std::size_t>(cfg.schedule.segments)));
                sb.ts.push_back(
                    erng.uniform(cfg.schedule.sample_lo(seg), cfg.schedule.sample_hi(seg)));
            }

            StepGrads sg = policy_step_grads(pol, sb);
            std::vector<Tensor> grads = std::move(sg.field_grads);
            for (Tensor& g : sg.encoder_grads) grads.push_back(std::move(g));
            numcore::adamw_step(params, grads, opt);
            flowmatch::ema_update(pol.ema, field_cparams);
            epoch_loss += sg.loss;
            ++steps;
        }
        result.epoch_losses.push_back(epoch_loss / static_cast<double>(steps));
        state.epochs_done = epoch + 1;

        if ((epoch + 1) % cfg.eval_every == 0) {
            sync_ema_field(pol);
            EvalOptions eo;
            eo.episodes = cfg.eval_episodes;
            eo.sampler = SamplerSpec::parse(cfg.eval_sampler);
            eo.use_ema = cfg.eval_use_ema;
            eo.seed = rng.derive(1000000 + epoch).next_u64();
            CheckpointEval ce = evaluate(pol, pol.task, eo);
            ce.epoch = epoch + 1;
            ce.train_loss = result.epoch_losses.back();
            result.report.checkpoints.push_back(ce);
            if (on_checkpoint) on_checkpoint(state, ce);
        }
    }
    sync_ema_field(pol);
    return result;
}

TrainResult train_policy(const std::vector<simenv::EpisodeRecord>& demos,
                         const PolicyConfig& cfg, const simenv::TaskSpec& task, Rng& rng,
                         const CheckpointFn& on_checkpoint) {
    TrainState st = init_train_state(demos, cfg, task, rng);
    TrainLog log = train_loop(st, demos, rng, on_checkpoint);
    return TrainResult{std::move(st.policy), std::move(log.report), std::move(log.epoch_losses)};
}

}  // namespace flowbench::policy
