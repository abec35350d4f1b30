#include "flowbench/perception/cloud_encoder.hpp"

#include "flowbench/error.hpp"

namespace flowbench::perception {

using numcore::Activation;
using numcore::MlpModel;

CloudEncoder CloudEncoder::make(const CloudEncoderConfig& cfg, Rng& rng) {
    if (cfg.point_hidden == 0 || cfg.point_features == 0 || cfg.out_dim == 0)
        throw ConfigError("cloud encoder: all widths must be positive");
    CloudEncoder enc;
    enc.point_mlp = MlpModel::make({3, cfg.point_hidden, cfg.point_features}, Activation::tanh,
                                   Activation::tanh, rng);
    enc.head = numcore::make_dense(cfg.point_features, cfg.out_dim, Activation::identity, rng);
    return enc;
}

std::vector<Tensor*> CloudEncoder::params() {
    std::vector<Tensor*> out = point_mlp.params();
    out.push_back(&head.w);
    out.push_back(&head.b);
    return out;
}

std::vector<const Tensor*> CloudEncoder::params() const {
    std::vector<const Tensor*> out = point_mlp.params();
    out.push_back(&head.w);
    out.push_back(&head.b);
    return out;
}

Tensor encode_batch(const CloudEncoder& enc, const Tensor& points,
                    std::size_t points_per_frame, EncoderCache* cache) {
    if (points.ndim() != 2 || points.cols() != 3)
        throw DimensionError("encode_batch: points must be (rows, 3)");
    if (points.rows() == 0 || points_per_frame == 0)
        throw RangeError("encode_batch: empty cloud");
    if (points.rows() % points_per_frame != 0)
        throw DimensionError("encode_batch: rows not divisible by points_per_frame");
    const std::size_t frames = points.rows() / points_per_frame;
    const std::size_t feat = enc.feature_dim();

    numcore::ActivationCache local_cache;
    numcore::ActivationCache* pc = cache != nullptr ? &cache->point_cache : &local_cache;
    Tensor h = numcore::mlp_forward(enc.point_mlp, points, pc);  // (rows, feat)

    Tensor pooled({frames, feat});
    std::vector<std::size_t> argmax(frames * feat);
    for (std::size_t f = 0; f < frames; ++f) {
        const std::size_t base = f * points_per_frame;
        for (std::size_t j = 0; j < feat; ++j) {
            std::size_t arg = base;
            double top = h.at(base, j);
            for (std::size_t r = base + 1; r < base + points_per_frame; ++r) {
                if (h.at(r, j) > top) {  // strict: first point wins ties
                    top = h.at(r, j);
                    arg = r;
                }
            }
            pooled.at(f, j) = top;
            argmax[f * feat + j] = arg;
        }
    }

    Tensor post;
    Tensor out = numcore::dense_forward(enc.head, pooled, &post);
    if (cache != nullptr) {
        cache->owner = &enc;
        cache->points_per_frame = points_per_frame;
        cache->argmax = std::move(argmax);
        cache->pooled = std::move(pooled);
        cache->head_post = std::move(post);
    }
    out.ensure_finite("cloud embedding");
    return out;
}

Tensor encode_cloud(const CloudEncoder& enc, const Tensor& cloud) {
    if (cloud.ndim() != 2 || cloud.cols() != 3)
        throw DimensionError("encode_cloud: cloud must be (N, 3)");
    if (cloud.rows() == 0) throw RangeError("encode_cloud: empty cloud");
    Tensor out = encode_batch(enc, cloud, cloud.rows());
    return numcore::row(out, 0);
}

void encoder_backward(const CloudEncoder& enc, const EncoderCache& cache, const Tensor& dout,
                      std::vector<Tensor>& grads) {
    if (cache.owner != &enc) throw ContractError("encoder_backward: cache from another encoder");
    const std::size_t frames = cache.pooled.rows();
    const std::size_t feat = enc.feature_dim();
    if (dout.ndim() != 2 || dout.rows() != frames || dout.cols() != enc.out_dim())
        throw DimensionError("encoder_backward: dout must be (frames, out_dim)");
    if (grads.size() != 2 * enc.point_mlp.layers.size() + 2)
        throw DimensionError("encoder_backward: grads must match params() layout");

    const std::size_t head_w = grads.size() - 2;
    Tensor dpooled;
    numcore::dense_backward(enc.head, cache.pooled, cache.head_post, dout, grads[head_w],
                            grads[head_w + 1], &dpooled);

    // Max-pool routes each pooled gradient to the winning point row.
    Tensor dh({cache.point_cache.input.rows(), feat});
    for (std::size_t f = 0; f < frames; ++f) {
        for (std::size_t j = 0; j < feat; ++j) {
            dh.at(cache.argmax[f * feat + j], j) += dpooled.at(f, j);
        }
    }

    numcore::ParamGrads pg = numcore::mlp_backward(enc.point_mlp, cache.point_cache, dh);
    for (std::size_t i = 0; i < pg.grads.size(); ++i) numcore::add_inplace(grads[i], pg.grads[i]);
}

}  // namespace flowbench::perception
