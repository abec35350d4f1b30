#include "flowbench/benchcli/dataset_io.hpp"

#include <fstream>
#include <iostream>
#include <map>
#include <string>

#include "flowbench/error.hpp"
#include "flowbench/numcore/serialize.hpp"
#include "json.hpp"

namespace flowbench::benchcli {

namespace {

constexpr char kMagic[] = "FBDATA01";
constexpr std::uint32_t kVersion = 1;

using namespace numcore;

void write_kv_block(std::ostream& out, const std::map<std::string, std::string>& kv) {
    write_u32(out, static_cast<std::uint32_t>(kv.size()));
    for (const auto& [k, v] : kv) {
        write_bytes(out, k);
        write_bytes(out, v);
    }
}

std::map<std::string, std::string> read_kv_block(std::istream& in) {
    std::map<std::string, std::string> kv;
    const std::uint32_t n = read_u32(in);
    for (std::uint32_t i = 0; i < n; ++i) {
        std::string k = read_bytes(in);
        kv[k] = read_bytes(in);
    }
    return kv;
}

void write_f32_tensor(std::ostream& out, const Tensor& t) {
    for (std::size_t i = 0; i < t.size(); ++i) {
        write_f32(out, static_cast<float>(t[i]));
    }
}

Tensor read_f32_tensor(std::istream& in, const std::vector<std::size_t>& shape) {
    Tensor t(shape);
    for (std::size_t i = 0; i < t.size(); ++i) {
        t[i] = static_cast<double>(read_f32(in));
    }
    return t;
}

std::string task_kv_json(const simenv::TaskSpec& t) {
    nlohmann::json j{{"variant", task_variant_name(t.variant)},
                     {"max_steps", t.max_steps},
                     {"tolerance", t.tolerance},
                     {"link1", t.link1},
                     {"link2", t.link2},
                     {"dt", t.dt},
                     {"action_clip", t.action_clip},
                     {"target_r_min", t.target_r_min},
                     {"target_r_max", t.target_r_max},
                     {"two_goal_min_y", t.two_goal_min_y},
                     {"link_points", t.link_points},
                     {"target_points", t.target_points},
                     {"target_disc_radius", t.target_disc_radius}};
    return j.dump();
}

simenv::TaskSpec task_from_kv_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("dataset task header: ") + e.what());
    }
    simenv::TaskSpec t;
    t.variant = parse_task_variant(j.at("variant").get<std::string>());
    t.max_steps = j.at("max_steps").get<int>();
    t.tolerance = j.at("tolerance").get<double>();
    t.link1 = j.at("link1").get<double>();
    t.link2 = j.at("link2").get<double>();
    t.dt = j.at("dt").get<double>();
    t.action_clip = j.at("action_clip").get<double>();
    t.target_r_min = j.at("target_r_min").get<double>();
    t.target_r_max = j.at("target_r_max").get<double>();
    t.two_goal_min_y = j.at("two_goal_min_y").get<double>();
    t.link_points = j.at("link_points").get<std::size_t>();
    t.target_points = j.at("target_points").get<std::size_t>();
    t.target_disc_radius = j.at("target_disc_radius").get<double>();
    return t;
}

}  // namespace

void save_dataset(const std::filesystem::path& path, const DemoDataset& data) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out.write(kMagic, 8);
    write_u32(out, kVersion);
    write_u64(out, data.config_hash);
    write_u64(out, data.seed);
    write_kv_block(out, {{"task", task_kv_json(data.task)},
                         {"demo_count", std::to_string(data.demos.size())}});
    write_u32(out, static_cast<std::uint32_t>(data.demos.size()));
    for (const auto& d : data.demos) {
        if (d.states.size() != d.actions.size() || d.clouds.size() != d.actions.size()) {
            throw ContractError("dataset save: ragged episode record");
        }
        if (d.actions.empty()) throw ContractError("dataset save: empty episode record");
        write_u8(out, d.success ? 1 : 0);
        write_u32(out, static_cast<std::uint32_t>(d.expert_goal));
        write_u32(out, static_cast<std::uint32_t>(d.steps_used));
        write_u32(out, static_cast<std::uint32_t>(d.actions.size()));
        write_u32(out, static_cast<std::uint32_t>(d.clouds.front().shape()[0]));
        write_u32(out, static_cast<std::uint32_t>(d.targets.size()));
        for (const auto& g : d.targets) write_f32_tensor(out, g);
        for (const auto& c : d.clouds) write_f32_tensor(out, c);
        for (const auto& s : d.states) write_f32_tensor(out, s);
        for (const auto& a : d.actions) write_f32_tensor(out, a);
    }
    if (!out) throw IoError("write failed for " + path.string());
}

DemoDataset load_dataset(const std::filesystem::path& path, std::uint64_t expected_hash) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    expect_magic(in, kMagic, "dataset file");
    check_version(read_u32(in), kVersion, "dataset file");
    DemoDataset data;
    data.config_hash = read_u64(in);
    data.seed = read_u64(in);
    if (expected_hash != 0 && data.config_hash != expected_hash) {
        std::cerr << "warning: dataset " << path.string() << " config hash "
                  << data.config_hash << " != expected " << expected_hash << "\n";
    }
    auto kv = read_kv_block(in);
    if (!kv.count("task")) throw IoError("dataset file: missing task header");
    data.task = task_from_kv_json(kv.at("task"));
    const std::uint32_t n = read_u32(in);
    data.demos.resize(n);
    for (auto& d : data.demos) {
        d.success = read_u8(in) != 0;
        d.expert_goal = read_u32(in);
        d.steps_used = static_cast<int>(read_u32(in));
        const std::uint32_t len = read_u32(in);
        const std::uint32_t cloud_rows = read_u32(in);
        const std::uint32_t n_targets = read_u32(in);
        d.targets.reserve(n_targets);
        for (std::uint32_t g = 0; g < n_targets; ++g) {
            d.targets.push_back(read_f32_tensor(in, {2}));
        }
        d.clouds.reserve(len);
        d.states.reserve(len);
        d.actions.reserve(len);
        for (std::uint32_t i = 0; i < len; ++i) {
            d.clouds.push_back(read_f32_tensor(in, {cloud_rows, 3}));
        }
        for (std::uint32_t i = 0; i < len; ++i) {
            d.states.push_back(read_f32_tensor(in, {simenv::kStateDim}));
        }
        for (std::uint32_t i = 0; i < len; ++i) {
            d.actions.push_back(read_f32_tensor(in, {simenv::kActionDim}));
        }
    }
    return data;
}

}  // namespace flowbench::benchcli
