#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "flowbench/benchcli/run_config.hpp"
#include "flowbench/simenv/episode.hpp"

namespace flowbench::benchcli {

// Demonstration file contents. Clouds/states/actions are stored as 32-bit
// floats, so a loaded dataset is the rounded image of the saved one;
// training always consumes the loaded form to keep runs reproducible from
// the file alone.
struct DemoDataset {
    simenv::TaskSpec task;
    std::uint64_t config_hash = 0;
    std::uint64_t seed = 0;
    std::vector<simenv::EpisodeRecord> demos;
};

void save_dataset(const std::filesystem::path& path, const DemoDataset& data);

// `expected_hash` nonzero: a stored hash that differs only warns on stderr.
// A version mismatch always fails.
DemoDataset load_dataset(const std::filesystem::path& path, std::uint64_t expected_hash = 0);

}  // namespace flowbench::benchcli
