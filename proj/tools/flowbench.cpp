#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "flowbench/benchcli/commands.hpp"
#include "flowbench/error.hpp"

namespace {

using namespace flowbench;

benchcli::RunConfig require_config(const std::string& path) {
    if (path.empty()) throw ConfigError("--config is required for this subcommand");
    return benchcli::load_run_config(path);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"flow-matching policy benchmark"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_path;
    std::string sampler;
    std::string data_path;
    std::string ckpt_path;
    std::string resume_path;
    std::uint64_t seed = 0;
    bool seed_set = false;

    auto add_common = [&](CLI::App* cmd, bool with_config) {
        if (with_config) cmd->add_option("--config", config_path, "run config JSON file");
        cmd->add_option("--seed", seed, "seed override")->each([&](const std::string&) {
            seed_set = true;
        });
        cmd->add_option("--out", out_path, "output file or directory");
    };

    CLI::App* demo_gen = app.add_subcommand("demo-gen", "generate expert demonstrations");
    add_common(demo_gen, true);

    CLI::App* train = app.add_subcommand("train", "train a policy on a dataset");
    add_common(train, true);
    train->add_option("--data", data_path, "demo dataset file");
    train->add_option("--resume", resume_path, "checkpoint to resume from");

    CLI::App* eval = app.add_subcommand("eval", "evaluate a trained checkpoint");
    add_common(eval, false);
    eval->add_option("--ckpt", ckpt_path, "checkpoint file")->required();
    eval->add_option("--sampler", sampler, "sampler override (onestep|segments|euler-N)");

    CLI::App* bench = app.add_subcommand("bench", "train and compare all methods");
    add_common(bench, true);

    CLI::App* gradcheck = app.add_subcommand("gradcheck", "finite-difference audit");
    gradcheck->add_option("--seed", seed, "seed override")->each([&](const std::string&) {
        seed_set = true;
    });

    CLI::App* oracle = app.add_subcommand("oracle-tests", "closed-form oracle checks");
    oracle->add_option("--seed", seed, "seed override")->each([&](const std::string&) {
        seed_set = true;
    });

    try {
        app.parse(argc, argv);

        if (demo_gen->parsed()) {
            const auto cfg = require_config(config_path);
            const std::uint64_t s = seed_set ? seed : cfg.seeds.front();
            const std::string out = out_path.empty() ? "demos.bin" : out_path;
            benchcli::cmd_demo_gen(cfg, s, out, std::cerr);
            std::cout << out << "\n";
        } else if (train->parsed()) {
            const auto cfg = require_config(config_path);
            if (data_path.empty()) throw ConfigError("--data is required for train");
            const std::uint64_t s = seed_set ? seed : cfg.seeds.front();
            const std::string out = out_path.empty() ? cfg.out_dir : out_path;
            benchcli::cmd_train(cfg, data_path, s, out, resume_path, std::cerr);
            std::cout << (std::filesystem::path(out) / "checkpoint.bin").string() << "\n";
        } else if (eval->parsed()) {
            std::vector<std::uint64_t> seeds_override;
            if (seed_set) seeds_override.push_back(seed);
            const auto res =
                benchcli::cmd_eval(ckpt_path, sampler, seeds_override, out_path, std::cerr);
            for (const auto& line : res.jsonl) std::cout << line << "\n";
        } else if (bench->parsed()) {
            const auto cfg = require_config(config_path);
            const std::string out = out_path.empty() ? cfg.out_dir : out_path;
            const auto rows = benchcli::cmd_bench(cfg, out, std::cerr);
            for (const auto& r : rows) std::cout << benchcli::result_row_json(r) << "\n";
            std::cout << benchcli::results_table(rows);
        } else if (gradcheck->parsed()) {
            if (!benchcli::run_gradcheck(seed_set ? seed : 42, std::cout)) return 2;
        } else if (oracle->parsed()) {
            if (!benchcli::run_oracle_tests(seed_set ? seed : 42, std::cout)) return 2;
        }
        return 0;
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
