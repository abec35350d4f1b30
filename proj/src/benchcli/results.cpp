#include "flowbench/benchcli/results.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "flowbench/error.hpp"
#include "json.hpp"

namespace flowbench::benchcli {

namespace {

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

std::string join_seeds(const std::vector<std::uint64_t>& seeds) {
    std::string out;
    for (std::size_t i = 0; i < seeds.size(); ++i) {
        if (i) out += ';';
        out += std::to_string(seeds[i]);
    }
    return out;
}

}  // namespace

void finalize_scores(ResultRow& row) {
    if (row.scores.empty()) return;
    double sum = 0.0;
    for (double s : row.scores) sum += s;
    row.success_mean = sum / static_cast<double>(row.scores.size());
    if (row.scores.size() >= 2) {
        double ss = 0.0;
        for (double s : row.scores) {
            const double d = s - row.success_mean;
            ss += d * d;
        }
        row.success_std = std::sqrt(ss / static_cast<double>(row.scores.size()));
        row.has_std = true;
    }
}

std::string result_row_json(const ResultRow& row) {
    nlohmann::json j{{"row", row.row},
                     {"task", row.task},
                     {"method", row.method},
                     {"sampler", row.sampler},
                     {"nfe", row.nfe},
                     {"seeds", row.seeds},
                     {"scores", row.scores},
                     {"success_mean", row.success_mean},
                     {"act_mean_ms", row.act_mean_ms},
                     {"act_std_ms", row.act_std_ms},
                     {"sample_mean_ms", row.sample_mean_ms},
                     {"cond_mean_ms", row.cond_mean_ms},
                     {"epochs", row.epochs},
                     {"demos", row.demos}};
    if (row.has_std) j["success_std"] = row.success_std;
    if (!row.error.empty()) j["error"] = row.error;
    return j.dump();
}

std::string results_csv(const std::vector<ResultRow>& rows) {
    std::ostringstream out;
    out << "row,task,method,sampler,nfe,seeds,success_mean,success_std,"
           "act_mean_ms,act_std_ms,sample_mean_ms,cond_mean_ms,epochs,demos,error\n";
    for (const auto& r : rows) {
        out << r.row << ',' << r.task << ',' << r.method << ',' << r.sampler << ','
            << r.nfe << ',' << join_seeds(r.seeds) << ',' << fmt_double(r.success_mean)
            << ',' << (r.has_std ? fmt_double(r.success_std) : std::string()) << ','
            << fmt_double(r.act_mean_ms) << ',' << fmt_double(r.act_std_ms) << ','
            << fmt_double(r.sample_mean_ms) << ',' << fmt_double(r.cond_mean_ms) << ','
            << r.epochs << ',' << r.demos << ',' << r.error << '\n';
    }
    return out.str();
}

std::string results_table(const std::vector<ResultRow>& rows) {
    std::ostringstream out;
    char line[256];
    std::snprintf(line, sizeof(line), "%-22s %-16s %-12s %-10s %4s %14s %12s\n", "row",
                  "task", "method", "sampler", "NFE", "success (%)", "act (ms)");
    out << line;
    out << std::string(96, '-') << '\n';
    for (const auto& r : rows) {
        if (!r.error.empty()) {
            std::snprintf(line, sizeof(line), "%-22s %-16s %-12s %-10s %4s %14s %12s\n",
                          r.row.c_str(), r.task.c_str(), r.method.c_str(),
                          r.sampler.c_str(), "-", "FAILED", "-");
            out << line;
            continue;
        }
        char succ[48];
        if (r.has_std) {
            std::snprintf(succ, sizeof(succ), "%.1f +/- %.1f", r.success_mean,
                          r.success_std);
        } else {
            std::snprintf(succ, sizeof(succ), "%.1f", r.success_mean);
        }
        char act[32];
        std::snprintf(act, sizeof(act), "%.3f", r.act_mean_ms);
        std::snprintf(line, sizeof(line), "%-22s %-16s %-12s %-10s %4lld %14s %12s\n",
                      r.row.c_str(), r.task.c_str(), r.method.c_str(), r.sampler.c_str(),
                      static_cast<long long>(r.nfe), succ, act);
        out << line;
    }
    return out.str();
}

void write_results(const std::filesystem::path& dir, const std::vector<ResultRow>& rows) {
    std::filesystem::create_directories(dir);
    {
        std::ofstream out(dir / "results.jsonl", std::ios::binary);
        if (!out) throw IoError("cannot open results.jsonl for writing");
        for (const auto& r : rows) out << result_row_json(r) << '\n';
    }
    {
        std::ofstream out(dir / "results.csv", std::ios::binary);
        if (!out) throw IoError("cannot open results.csv for writing");
        out << results_csv(rows);
    }
}

}  // namespace flowbench::benchcli
