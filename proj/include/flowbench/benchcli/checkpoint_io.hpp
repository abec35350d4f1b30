#pragma once

#include <cstdint>
#include <filesystem>

#include "flowbench/benchcli/run_config.hpp"
#include "flowbench/policy/policy.hpp"

namespace flowbench::benchcli {

// A checkpoint is the full training state plus the config that produced it;
// loading rebuilds the network topology from the stored config, so the file
// stands alone. All parameters, optimizer moments and normalizer bounds are
// stored as 64-bit floats for bit-exact resume.
struct Checkpoint {
    RunConfig config;  // stored echo; authoritative on load
    std::uint64_t seed = 0;
    policy::TrainState state;
};

void save_checkpoint(const std::filesystem::path& path, const RunConfig& config,
                     std::uint64_t seed, const policy::TrainState& state);

// `expected_hash` nonzero: a stored hash that differs only warns on stderr.
// A version mismatch always fails.
Checkpoint load_checkpoint(const std::filesystem::path& path,
                           std::uint64_t expected_hash = 0);

}  // namespace flowbench::benchcli
