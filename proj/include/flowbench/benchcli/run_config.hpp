#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "flowbench/policy/policy.hpp"
#include "flowbench/simenv/sim.hpp"

namespace flowbench::benchcli {

// Everything a run needs: environment, policy/training hyperparameters (the
// segment schedule lives inside the policy config), the seed list, the
// sampler used at evaluation time and the output directory.
struct RunConfig {
    simenv::TaskSpec task;
    policy::PolicyConfig policy;
    std::vector<std::uint64_t> seeds = {1, 2, 3};
    std::string sampler = "onestep";
    std::string out_dir = "out";

    void validate() const;
};

std::string task_variant_name(simenv::TaskVariant v);
simenv::TaskVariant parse_task_variant(const std::string& name);

// Strict JSON parse: every key at every level must be known, all values
// type-checked; missing keys keep their defaults.
RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::filesystem::path& path);

// Canonical serialization (sorted keys, full field set); parsing it back is
// the identity.
std::string serialize_run_config(const RunConfig& cfg);

// FNV-1a over the canonical serialization of everything that shapes the
// model and data — task, policy, schedule, sampler — but not the seed list
// or output directory, so reruns under new seeds still match their files.
std::uint64_t config_hash(const RunConfig& cfg);

}  // namespace flowbench::benchcli
