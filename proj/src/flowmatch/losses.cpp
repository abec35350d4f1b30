#include "flowbench/flowmatch/losses.hpp"

#include <cmath>
#include <string>

#include "flowbench/error.hpp"

namespace flowbench::flowmatch {

Tensor interpolate(const Tensor& x0, const Tensor& x1, double t) {
    if (!x0.same_shape(x1)) throw DimensionError("interpolate: shape mismatch");
    if (t < 0.0 || t > 1.0) throw RangeError("interpolate: t outside [0,1]");
    Tensor out = x0;
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = (1.0 - t) * x0[k] + t * x1[k];
    return out;
}

Tensor f_map(const VelocityField& field, double t, const Tensor& x, const Tensor& cond,
             int segment, int num_segments) {
    if (num_segments < 1) throw RangeError("f_map: segment count must be positive");
    if (segment < 0 || segment >= num_segments) throw RangeError("f_map: segment out of range");
    const double start = static_cast<double>(segment) / num_segments;
    const double end = static_cast<double>(segment + 1) / num_segments;
    if (t < start - 1e-12 || t > end + 1e-12) throw RangeError("f_map: t outside segment");
    Tensor v = field.eval(t, x, cond);
    if (!v.same_shape(x)) throw DimensionError("f_map: field output shape mismatch");
    Tensor out = x;
    numcore::axpy(out, end - t, v);
    return out;
}

namespace {

struct BatchInputs {
    Tensor times;  // (n)
    Tensor xs;     // (n, d)
    Tensor conds;  // (n, c) or empty
};

// Assembles x_t rows at per-sample offset `dt` past each sample's own t.
BatchInputs assemble(const MlpVelocityField& field, const std::vector<CouplingSample>& batch,
                     double dt) {
    if (batch.empty()) throw ContractError("loss: batch must be nonempty");
    const MlpFieldConfig& cfg = field.config();
    const std::size_t n = batch.size();
    BatchInputs in;
    in.times = Tensor({n});
    in.xs = Tensor({n, cfg.sample_dim});
    if (cfg.cond_dim > 0) in.conds = Tensor({n, cfg.cond_dim});
    for (std::size_t i = 0; i < n; ++i) {
        const CouplingSample& s = batch[i];
        if (s.x0.ndim() != 1 || s.x0.shape()[0] != cfg.sample_dim)
            throw DimensionError("loss: sample x0 must be 1-D of sample_dim");
        const double t = s.t + dt;
        in.times[i] = t;
        Tensor xt = interpolate(s.x0, s.x1, t);
        for (std::size_t j = 0; j < cfg.sample_dim; ++j) in.xs.at(i, j) = xt[j];
        if (cfg.cond_dim > 0) {
            if (s.cond.ndim() != 1 || s.cond.shape()[0] != cfg.cond_dim)
                throw DimensionError("loss: sample cond must be 1-D of cond_dim");
            for (std::size_t j = 0; j < cfg.cond_dim; ++j) in.conds.at(i, j) = s.cond[j];
        } else if (!s.cond.empty()) {
            throw DimensionError("loss: unconditional field but sample has cond");
        }
    }
    return in;
}

std::vector<Tensor> zero_grads(const MlpVelocityField& field) {
    std::vector<Tensor> grads;
    for (const Tensor* p : field.params()) grads.push_back(Tensor(p->shape()));
    return grads;
}

void check_finite_loss(double value, const char* what) {
    if (!std::isfinite(value)) throw NumericError(std::string(what) + ": non-finite loss");
}

}  // namespace

double cfm_loss_value(const VelocityField& field, const std::vector<CouplingSample>& batch) {
    if (batch.empty()) throw ContractError("cfm loss: batch must be nonempty");
    double total = 0.0;
    for (const CouplingSample& s : batch) {
        Tensor xt = interpolate(s.x0, s.x1, s.t);
        Tensor v = field.eval(s.t, xt, s.cond);
        if (!v.same_shape(s.x0)) throw DimensionError("cfm loss: field output shape mismatch");
        double acc = 0.0;
        for (std::size_t k = 0; k < v.size(); ++k) {
            const double r = v[k] - (s.x1[k] - s.x0[k]);
            acc += r * r;
        }
        total += acc;
    }
    const double value = total / static_cast<double>(batch.size());
    check_finite_loss(value, "cfm loss");
    return value;
}

LossResult cfm_loss(const MlpVelocityField& field, const std::vector<CouplingSample>& batch) {
    BatchInputs in = assemble(field, batch, 0.0);
    const std::size_t n = batch.size();
    const std::size_t d = field.config().sample_dim;

    FieldCache cache;
    Tensor v = field.forward_batch(in.times, in.xs, in.conds, &cache);

    LossResult res;
    Tensor dv({n, d});
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            const double u = batch[i].x1[j] - batch[i].x0[j];
            const double r = v.at(i, j) - u;
            total += r * r;
            dv.at(i, j) = 2.0 * r / static_cast<double>(n);
        }
    }
    res.value = total / static_cast<double>(n);
    check_finite_loss(res.value, "cfm loss");

    res.grads = zero_grads(field);
    field.backward_batch(cache, dv, res.grads,
                         field.config().cond_dim > 0 ? &res.cond_grads : nullptr);
    return res;
}

ConsistencyTargets consistency_targets(const MlpVelocityField& field, const EmaState& ema,
                                       const SegmentSchedule& sched,
                                       const std::vector<CouplingSample>& batch) {
    sched.validate();
    BatchInputs in = assemble(field, batch, sched.delta_t);

    MlpVelocityField target = field;
    target.set_params(ema.shadow);
    Tensor v_tgt = target.forward_batch(in.times, in.xs, in.conds);

    const std::size_t n = batch.size();
    const std::size_t d = field.config().sample_dim;
    ConsistencyTargets tgt;
    tgt.segments.resize(n);
    tgt.v_tgt = v_tgt;
    tgt.f_tgt = Tensor({n, d});
    for (std::size_t i = 0; i < n; ++i) {
        const int seg = sched.segment_of(batch[i].t);
        tgt.segments[i] = seg;
        const double span = sched.segment_end(seg) - in.times[i];
        for (std::size_t j = 0; j < d; ++j)
            tgt.f_tgt.at(i, j) = in.xs.at(i, j) + span * v_tgt.at(i, j);
    }
    return tgt;
}

LossResult consistency_loss_given_targets(const MlpVelocityField& field,
                                          const SegmentSchedule& sched,
                                          const std::vector<CouplingSample>& batch,
                                          const ConsistencyTargets& targets) {
    BatchInputs in = assemble(field, batch, 0.0);
    const std::size_t n = batch.size();
    const std::size_t d = field.config().sample_dim;
    if (targets.segments.size() != n || targets.f_tgt.rows() != n || targets.v_tgt.rows() != n)
        throw DimensionError("consistency loss: targets do not match batch");

    FieldCache cache;
    Tensor v = field.forward_batch(in.times, in.xs, in.conds, &cache);

    LossResult res;
    Tensor dv({n, d});
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const int seg = targets.segments[i];
        const double lam = sched.weight(seg);
        const double span = sched.segment_end(seg) - batch[i].t;
        for (std::size_t j = 0; j < d; ++j) {
            const double f_live = in.xs.at(i, j) + span * v.at(i, j);
            const double fr = f_live - targets.f_tgt.at(i, j);
            const double vr = v.at(i, j) - targets.v_tgt.at(i, j);
            total += lam * fr * fr + sched.alpha * vr * vr;
            dv.at(i, j) =
                (2.0 * lam * span * fr + 2.0 * sched.alpha * vr) / static_cast<double>(n);
        }
    }
    res.value = total / static_cast<double>(n);
    check_finite_loss(res.value, "consistency loss");

    res.grads = zero_grads(field);
    field.backward_batch(cache, dv, res.grads,
                         field.config().cond_dim > 0 ? &res.cond_grads : nullptr);
    return res;
}

LossResult consistency_fm_loss(const MlpVelocityField& field, const EmaState& ema,
                               const SegmentSchedule& sched,
                               const std::vector<CouplingSample>& batch) {
    ConsistencyTargets tgt = consistency_targets(field, ema, sched, batch);
    return consistency_loss_given_targets(field, sched, batch, tgt);
}

double consistency_fm_loss_value(const VelocityField& live, const VelocityField& target,
                                 const SegmentSchedule& sched,
                                 const std::vector<CouplingSample>& batch) {
    sched.validate();
    if (batch.empty()) throw ContractError("consistency loss: batch must be nonempty");
    double total = 0.0;
    for (const CouplingSample& s : batch) {
        const int seg = sched.segment_of(s.t);
        const double end = sched.segment_end(seg);
        const double t2 = s.t + sched.delta_t;
        Tensor xt = interpolate(s.x0, s.x1, s.t);
        Tensor xt2 = interpolate(s.x0, s.x1, t2);
        Tensor v1 = live.eval(s.t, xt, s.cond);
        Tensor v2 = target.eval(t2, xt2, s.cond);
        if (!v1.same_shape(xt) || !v2.same_shape(xt))
            throw DimensionError("consistency loss: field output shape mismatch");
        double acc = 0.0;
        for (std::size_t k = 0; k < xt.size(); ++k) {
            const double f1 = xt[k] + (end - s.t) * v1[k];
            const double f2 = xt2[k] + (end - t2) * v2[k];
            const double fr = f1 - f2;
            const double vr = v1[k] - v2[k];
            acc += sched.weight(seg) * fr * fr + sched.alpha * vr * vr;
        }
        total += acc;
    }
    const double value = total / static_cast<double>(batch.size());
    check_finite_loss(value, "consistency loss");
    return value;
}

}  // namespace flowbench::flowmatch
