#include "flowbench/benchcli/checkpoint_io.hpp"

#include <fstream>
#include <iostream>
#include <string>
#include <utility>

#include "flowbench/error.hpp"
#include "flowbench/numcore/serialize.hpp"

namespace flowbench::benchcli {

namespace {

constexpr char kMagic[] = "FBCKPT01";
constexpr std::uint32_t kVersion = 1;

using namespace numcore;

std::vector<Tensor> copy_params(const std::vector<const Tensor*>& ps) {
    std::vector<Tensor> out;
    out.reserve(ps.size());
    for (const Tensor* p : ps) out.push_back(*p);
    return out;
}

void assign_params(std::vector<Tensor*> dst, const std::vector<Tensor>& src,
                   const char* what) {
    if (dst.size() != src.size()) {
        throw IoError(std::string(what) + ": parameter count mismatch");
    }
    for (std::size_t i = 0; i < dst.size(); ++i) {
        if (!dst[i]->same_shape(src[i])) {
            throw IoError(std::string(what) + ": parameter shape mismatch");
        }
        *dst[i] = src[i];
    }
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const RunConfig& config,
                     std::uint64_t seed, const policy::TrainState& state) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out.write(kMagic, 8);
    write_u32(out, kVersion);
    write_u64(out, config_hash(config));
    write_u32(out, 2);  // header kv count
    write_bytes(out, "config");
    write_bytes(out, serialize_run_config(config));
    write_bytes(out, "seed");
    write_bytes(out, std::to_string(seed));
    write_u64(out, state.epochs_done);
    write_u64(out, state.opt.step_count);
    const auto& pol = state.policy;
    write_tensors(out, pol.encoder.params());
    write_tensors(out, pol.field.params());
    write_tensors(out, pol.ema.shadow);
    write_tensors(out, state.opt.m);
    write_tensors(out, state.opt.v);
    write_tensors(out, {&pol.action_norm.lo, &pol.action_norm.hi, &pol.state_norm.lo,
                        &pol.state_norm.hi});
    if (!out) throw IoError("write failed for " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path,
                           std::uint64_t expected_hash) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    expect_magic(in, kMagic, "checkpoint file");
    check_version(read_u32(in), kVersion, "checkpoint file");
    const std::uint64_t stored_hash = read_u64(in);
    if (expected_hash != 0 && stored_hash != expected_hash) {
        std::cerr << "warning: checkpoint " << path.string() << " config hash "
                  << stored_hash << " != expected " << expected_hash << "\n";
    }
    std::string config_text;
    std::string seed_text;
    const std::uint32_t kv = read_u32(in);
    for (std::uint32_t i = 0; i < kv; ++i) {
        const std::string key = read_bytes(in);
        const std::string val = read_bytes(in);
        if (key == "config") config_text = val;
        if (key == "seed") seed_text = val;
    }
    if (config_text.empty()) throw IoError("checkpoint file: missing config header");

    Checkpoint ck;
    ck.config = parse_run_config(config_text);
    ck.seed = seed_text.empty() ? 0 : std::stoull(seed_text);
    ck.state.epochs_done = read_u64(in);
    const std::uint64_t step_count = read_u64(in);
    const auto enc_params = read_tensors(in);
    const auto field_params = read_tensors(in);
    const auto shadow = read_tensors(in);
    const auto opt_m = read_tensors(in);
    const auto opt_v = read_tensors(in);
    const auto norms = read_tensors(in);
    if (norms.size() != 4) throw IoError("checkpoint file: expected 4 normalizer tensors");

    auto& pol = ck.state.policy;
    pol.cfg = ck.config.policy;
    pol.task = ck.config.task;
    Rng scratch(0);
    pol.encoder = perception::CloudEncoder::make(pol.cfg.encoder, scratch);
    flowmatch::MlpFieldConfig fcfg;
    fcfg.sample_dim = pol.cfg.chunk_dim();
    fcfg.cond_dim = pol.cfg.cond_dim();
    fcfg.hidden = pol.cfg.hidden;
    fcfg.time_dim = pol.cfg.time_dim;
    pol.field = flowmatch::MlpVelocityField::make(fcfg, scratch);
    assign_params(pol.encoder.params(), enc_params, "checkpoint encoder");
    pol.field.set_params(field_params);
    const std::vector<const Tensor*> live_params = std::as_const(pol.field).params();
    pol.ema = flowmatch::make_ema(live_params, pol.cfg.ema_decay);
    if (shadow.size() != pol.ema.shadow.size()) {
        throw IoError("checkpoint file: EMA tensor count mismatch");
    }
    pol.ema.shadow = shadow;
    pol.ema_field = pol.field;
    policy::sync_ema_field(pol);
    pol.action_norm = {norms[0], norms[1]};
    pol.state_norm = {norms[2], norms[3]};

    std::vector<Tensor*> opt_params = pol.field.params();
    for (Tensor* p : pol.encoder.params()) opt_params.push_back(p);
    ck.state.opt = numcore::make_adamw(opt_params, pol.cfg.optim);
    ck.state.opt.step_count = step_count;
    if (opt_m.size() != ck.state.opt.m.size() || opt_v.size() != ck.state.opt.v.size()) {
        throw IoError("checkpoint file: optimizer tensor count mismatch");
    }
    ck.state.opt.m = opt_m;
    ck.state.opt.v = opt_v;
    return ck;
}

}  // namespace flowbench::benchcli
