#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "flowbench/flowmatch/ema.hpp"
#include "flowbench/flowmatch/losses.hpp"
#include "flowbench/flowmatch/mlp_field.hpp"
#include "flowbench/flowmatch/samplers.hpp"
#include "flowbench/flowmatch/schedule.hpp"
#include "flowbench/numcore/adamw.hpp"
#include "flowbench/numcore/rng.hpp"
#include "flowbench/perception/cloud_encoder.hpp"
#include "flowbench/perception/normalizer.hpp"
#include "flowbench/simenv/episode.hpp"

namespace flowbench::policy {

using numcore::Rng;
using numcore::Tensor;

enum class TrainMethod { consistency, cfm };

TrainMethod parse_method(const std::string& name);
std::string method_name(TrainMethod method);

// Sampler selector shared by evaluation and the CLI; euler carries its step
// count ("euler-10").
struct SamplerSpec {
    enum class Kind { onestep, segments, euler };
    Kind kind = Kind::onestep;
    int euler_steps = 10;

    static SamplerSpec parse(const std::string& name);
    std::string name() const;
};

struct PolicyConfig {
    std::size_t obs_horizon = 2;   // stacked past observations
    std::size_t pred_horizon = 8;  // predicted actions per chunk
    std::size_t exec_horizon = 4;  // executed prefix of each chunk
    flowmatch::SegmentSchedule schedule{};
    TrainMethod method = TrainMethod::consistency;
    std::vector<std::size_t> hidden = {256, 256, 256};
    std::size_t time_dim = 8;
    perception::CloudEncoderConfig encoder{};
    std::size_t fps_points = 32;  // cloud size fed to the encoder
    numcore::AdamWConfig optim{};
    std::size_t batch_size = 128;
    double ema_decay = 0.95;
    std::size_t epochs = 3000;
    std::size_t eval_every = 200;    // checkpoint cadence, in epochs
    std::size_t eval_episodes = 20;  // episodes per checkpoint
    std::size_t demo_count = 10;
    std::string eval_sampler = "onestep";
    bool eval_use_ema = true;

    std::size_t chunk_dim() const { return pred_horizon * simenv::kActionDim; }
    std::size_t cond_dim() const {
        return obs_horizon * (encoder.out_dim + simenv::kStateDim);
    }
    void validate() const;
};

// Sliding windows over demonstrations: per window the fps-reduced clouds and
// normalized states of the observation history (oldest first) plus the
// normalized, time-major flattened action chunk.
struct WindowDataset {
    std::size_t obs_horizon = 0;
    std::size_t fps_points = 0;
    std::vector<Tensor> frames;  // (obs_horizon * fps_points, 3) each
    std::vector<Tensor> states;  // (obs_horizon * kStateDim) each
    std::vector<Tensor> chunks;  // (pred_horizon * kActionDim) each

    std::size_t size() const { return chunks.size(); }
};

struct TrainedPolicy {
    PolicyConfig cfg;
    simenv::TaskSpec task;
    perception::CloudEncoder encoder;
    flowmatch::MlpVelocityField field;      // live parameters
    flowmatch::MlpVelocityField ema_field;  // materialized EMA parameters
    flowmatch::EmaState ema;
    perception::Normalizer action_norm;
    perception::Normalizer state_norm;
};

// Copies the EMA shadow into ema_field so inference can use it directly.
void sync_ema_field(TrainedPolicy& pol);

// Untrained policy with freshly initialized encoder/field and normalizers
// fitted on the demos; the starting point of train_policy.
TrainedPolicy init_policy(const PolicyConfig& cfg, const simenv::TaskSpec& task,
                          const std::vector<simenv::EpisodeRecord>& demos, Rng& rng);

perception::Normalizer fit_action_normalizer(const std::vector<simenv::EpisodeRecord>& demos);
perception::Normalizer fit_state_normalizer(const std::vector<simenv::EpisodeRecord>& demos);

WindowDataset build_windows(const std::vector<simenv::EpisodeRecord>& demos,
                            const PolicyConfig& cfg,
                            const perception::Normalizer& action_norm,
                            const perception::Normalizer& state_norm);

// Condition vector of one live observation: per frame fps -> encoder
// embedding, concatenated oldest-first, then the normalized state vectors.
Tensor build_condition(const TrainedPolicy& pol, const simenv::Observation& obs);

// One optimizer step's batch in dataset layout, with the noise draws and
// interpolation times already fixed.
struct StepBatch {
    Tensor frames;               // (batch * obs_horizon * fps_points, 3)
    std::vector<Tensor> states;  // normalized (obs_horizon * kStateDim) each
    std::vector<Tensor> chunks;  // x1 per sample
    std::vector<Tensor> noises;  // x0 per sample
    std::vector<double> ts;
};

struct StepGrads {
    double loss = 0.0;
    std::vector<Tensor> field_grads;    // parallel to field.params()
    std::vector<Tensor> encoder_grads;  // parallel to encoder.params()
};

// Loss and gradients of one training step at the current parameters; the
// consistency method computes its EMA targets internally (held fixed).
StepGrads policy_step_grads(const TrainedPolicy& pol, const StepBatch& batch);

// Target-branch outputs captured at the nominal parameters, for
// finite-difference checks of the consistency objective.
flowmatch::ConsistencyTargets capture_targets(const TrainedPolicy& pol, const StepBatch& batch);

// Loss value at the current parameters. `frozen` must be the captured
// targets for the consistency method and null for the regression baseline.
double policy_step_value(const TrainedPolicy& pol, const StepBatch& batch,
                         const flowmatch::ConsistencyTargets* frozen);

struct CheckpointEval {
    std::size_t epoch = 0;
    double success_rate = 0.0;  // percent
    std::size_t wins = 0;
    std::size_t episodes = 0;
    std::int64_t nfe_per_act = 0;
    double mean_act_ms = 0.0;
    double std_act_ms = 0.0;
    double mean_cond_ms = 0.0;
    double mean_sample_ms = 0.0;
    double train_loss = 0.0;
};

struct EvalReport {
    std::vector<CheckpointEval> checkpoints;

    bool has_final_score() const { return checkpoints.size() >= 5; }
    // Mean of the five highest checkpoint success rates; requires >= 5.
    double final_score() const;
};

// Everything the training loop mutates; serializing it checkpoints a run.
struct TrainState {
    TrainedPolicy policy;
    numcore::OptimizerState opt;
    std::size_t epochs_done = 0;
};

using CheckpointFn = std::function<void(const TrainState&, const CheckpointEval&)>;

struct TrainLog {
    EvalReport report;
    std::vector<double> epoch_losses;  // mean loss per epoch actually run
};

struct TrainResult {
    TrainedPolicy policy;
    EvalReport report;
    std::vector<double> epoch_losses;
};

TrainState init_train_state(const std::vector<simenv::EpisodeRecord>& demos,
                            const PolicyConfig& cfg, const simenv::TaskSpec& task, Rng& rng);

// Runs epochs [state.epochs_done, cfg.epochs). Epoch RNG streams derive from
// the master seed and the absolute epoch index, so a resumed run retraces
// the uninterrupted one exactly.
TrainLog train_loop(TrainState& state, const std::vector<simenv::EpisodeRecord>& demos,
                    Rng& rng, const CheckpointFn& on_checkpoint = nullptr);

TrainResult train_policy(const std::vector<simenv::EpisodeRecord>& demos,
                         const PolicyConfig& cfg, const simenv::TaskSpec& task, Rng& rng,
                         const CheckpointFn& on_checkpoint = nullptr);

struct ActResult {
    Tensor actions;  // (exec_horizon, kActionDim), denormalized
    std::int64_t nfe = 0;
    double cond_seconds = 0.0;    // fps + encoding + normalization
    double sample_seconds = 0.0;  // noise draw + field sampling
    double total_seconds = 0.0;
};

ActResult act(const TrainedPolicy& pol, const simenv::Observation& obs, Rng& rng,
              const SamplerSpec& sampler, bool use_ema);

// Aggregate act-call statistics across an evaluation run.
struct ActStats {
    std::size_t calls = 0;
    std::int64_t nfe_per_act = 0;  // constant across calls by contract
    double total_s = 0.0;
    double total_sq_s = 0.0;
    double cond_s = 0.0;
    double sample_s = 0.0;

    double mean_ms() const;
    double std_ms() const;
};

// Wraps the trained policy for run_episode. Non-finite sampler output is
// converted to a NaN action row so the episode fails with an error tag.
simenv::PolicyFn as_policy_fn(const TrainedPolicy& pol, const SamplerSpec& sampler,
                              bool use_ema, Rng& rng, ActStats* stats = nullptr);

struct EvalOptions {
    std::size_t episodes = 20;
    SamplerSpec sampler{};
    bool use_ema = true;
    std::uint64_t seed = 0;
};

CheckpointEval evaluate(const TrainedPolicy& pol, const simenv::TaskSpec& task,
                        const EvalOptions& opt,
                        std::vector<simenv::EpisodeRecord>* records = nullptr);

// Success rate (percent) of an arbitrary policy under the same per-episode
// seeding rule as evaluate.
double policy_success_rate(const simenv::PolicyFn& fn, const simenv::TaskSpec& task,
                           std::size_t episodes, std::uint64_t seed,
                           std::size_t obs_horizon);

// Post-action end-effector position of a recorded episode.
Tensor episode_final_ee(const simenv::TaskSpec& task, const simenv::EpisodeRecord& rec);

// Fraction of episodes ending within `radius` of the midpoint between the
// two goals while outside tolerance of both — the mode-averaging marker.
double midpoint_stall_fraction(const simenv::TaskSpec& task,
                               const std::vector<simenv::EpisodeRecord>& recs,
                               double radius = 0.15);

struct TimingReport {
    double mean_total_ms = 0.0;
    double std_total_ms = 0.0;
    double mean_sample_ms = 0.0;
    double std_sample_ms = 0.0;
    double mean_cond_ms = 0.0;
    std::int64_t nfe = 0;
    std::size_t reps = 0;
};

// Repeated act calls on a fixed observation, single-threaded; warmup calls
// are discarded.
TimingReport measure_act_timing(const TrainedPolicy& pol, const simenv::Observation& obs,
                                const SamplerSpec& sampler, bool use_ema,
                                std::size_t warmup, std::size_t reps, std::uint64_t seed);

}  // namespace flowbench::policy
