#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace flowbench::benchcli {

// One benchmark table row, aggregated across seeds. Every wall-clock field
// name ends in "_ms" so determinism comparisons can mask exactly the timing
// columns. `error` nonempty marks a failed cell; its metric fields are then
// meaningless.
struct ResultRow {
    std::string row;      // e.g. "flowpolicy-onestep"
    std::string task;
    std::string method;   // training objective tag
    std::string sampler;
    std::int64_t nfe = 0;
    std::vector<std::uint64_t> seeds;
    std::vector<double> scores;  // per-seed final scores, percent
    double success_mean = 0.0;
    double success_std = 0.0;    // valid only when has_std
    bool has_std = false;        // set only when >= 2 seeds ran
    double act_mean_ms = 0.0;
    double act_std_ms = 0.0;
    double sample_mean_ms = 0.0;
    double cond_mean_ms = 0.0;
    std::size_t epochs = 0;
    std::size_t demos = 0;
    std::string error;
};

// Fills success_mean/std from `scores` (population std, >= 2 seeds only).
void finalize_scores(ResultRow& row);

std::string result_row_json(const ResultRow& row);               // one JSONL line
std::string results_csv(const std::vector<ResultRow>& rows);     // header + rows
std::string results_table(const std::vector<ResultRow>& rows);   // human-readable

// Writes results.jsonl and results.csv into `dir` (created if needed).
void write_results(const std::filesystem::path& dir, const std::vector<ResultRow>& rows);

}  // namespace flowbench::benchcli
