#pragma once

#include <cstdint>
#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "flowbench/benchcli/checkpoint_io.hpp"
#include "flowbench/benchcli/dataset_io.hpp"
#include "flowbench/benchcli/results.hpp"
#include "flowbench/benchcli/run_config.hpp"

namespace flowbench::benchcli {

// Expert rollouts for a demonstration dataset. Only successful episodes are
// kept; a demo that still has no success after the per-demo retry budget
// aborts with a diagnostic. Progress goes to `log` (stderr in the CLI).
std::vector<simenv::EpisodeRecord> generate_demos(const simenv::TaskSpec& task,
                                                  std::size_t count, std::uint64_t seed,
                                                  std::size_t obs_horizon, std::ostream& log);

// Writes the demo dataset for `cfg` to `out_file`.
void cmd_demo_gen(const RunConfig& cfg, std::uint64_t seed,
                  const std::filesystem::path& out_file, std::ostream& log);

// Trains on a saved dataset; writes checkpoint.bin (latest good state) and
// train_log.jsonl (per-epoch losses + per-checkpoint eval rows) into
// `out_dir`. `resume_from` nonempty: continues that checkpoint, its stored
// config and seed taking precedence; a larger epoch target in `cfg` extends
// the run. A numeric abort keeps the last good checkpoint on disk and
// rethrows.
void cmd_train(const RunConfig& cfg, const std::filesystem::path& dataset_file,
               std::uint64_t seed, const std::filesystem::path& out_dir,
               const std::filesystem::path& resume_from, std::ostream& log);

struct EvalOutput {
    std::vector<std::string> jsonl;  // per-seed rows, then one summary row
    ResultRow summary;
    double speedup = 0.0;  // euler-10 over one-step sampling wall time
};

// Evaluates a checkpoint under its stored config. `sampler_override`
// nonempty replaces the configured sampler; `seeds_override` nonempty
// replaces the seed list. Timing runs single-threaded on a fixed
// observation, 20 warm-up + 200 measured calls, for both the requested
// sampler and the euler-10/one-step pair behind the speedup field.
EvalOutput cmd_eval(const std::filesystem::path& ckpt_file,
                    const std::string& sampler_override,
                    const std::vector<std::uint64_t>& seeds_override,
                    const std::filesystem::path& out_file, std::ostream& log);

// Full comparison: trains the consistency policy and the regression
// baseline on one shared dataset across all configured seeds, then emits
// exactly the rows {flowpolicy-onestep, flowpolicy-segments, cfm-euler10}.
// A failed cell becomes a row with an error marker instead of aborting the
// whole run. Writes results.jsonl/results.csv plus per-cell checkpoints and
// train logs under `out_dir`.
std::vector<ResultRow> cmd_bench(const RunConfig& cfg, const std::filesystem::path& out_dir,
                                 std::ostream& log);

// Finite-difference audit of every training objective on small dimensions;
// prints one PASS/FAIL line per check. Returns true when all pass.
bool run_gradcheck(std::uint64_t seed, std::ostream& out);

// Closed-form oracles: analytic-field zero loss, exact transport and f-map
// identities, EMA recurrence, normalizer round-trip. Returns true when all
// pass.
bool run_oracle_tests(std::uint64_t seed, std::ostream& out);

}  // namespace flowbench::benchcli
