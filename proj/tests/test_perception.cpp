#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include "flowbench/numcore/gradcheck.hpp"
#include "flowbench/numcore/rng.hpp"
#include "flowbench/perception/cloud_encoder.hpp"
#include "flowbench/perception/fps.hpp"
#include "flowbench/perception/normalizer.hpp"
#include "support/helpers.hpp"

using namespace flowbench;
using namespace flowbench::perception;
using numcore::Rng;
using testsupport::max_abs_diff;

namespace {

// Exhaustive greedy oracle, recomputing min-distances from scratch each
// pick. Shares no code with the library implementation.
std::vector<std::size_t> fps_oracle(const std::vector<std::array<double, 3>>& pts,
                                    std::size_t m, std::size_t start) {
    std::vector<std::size_t> picked{start};
    while (picked.size() < m) {
        std::size_t arg = 0;
        double far = -1.0;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            double nearest = std::numeric_limits<double>::infinity();
            for (std::size_t p : picked) {
                double d2 = 0.0;
                for (int c = 0; c < 3; ++c) {
                    const double d = pts[i][c] - pts[p][c];
                    d2 += d * d;
                }
                nearest = std::min(nearest, d2);
            }
            if (nearest > far) {
                far = nearest;
                arg = i;
            }
        }
        picked.push_back(arg);
    }
    return picked;
}

Tensor collinear_cloud() {
    Tensor cloud({4, 3});
    cloud.at(0, 0) = 0.0;
    cloud.at(1, 0) = 1.0;
    cloud.at(2, 0) = 2.0;
    cloud.at(3, 0) = 9.0;
    return cloud;
}

}  // namespace

TEST_CASE("fps with m == N returns a permutation") {
    Rng rng(31);
    Tensor cloud = rng.gaussian_tensor({10, 3});
    std::vector<std::size_t> idx = fps(cloud, 10, 4);
    std::vector<bool> seen(10, false);
    for (std::size_t i : idx) {
        CHECK_FALSE(seen[i]);
        seen[i] = true;
    }
    CHECK(idx.front() == 4);
}

TEST_CASE("fps collinear example") {
    Tensor cloud = collinear_cloud();
    std::vector<std::size_t> two = fps(cloud, 2, 0);
    REQUIRE(two.size() == 2);
    CHECK(two[0] == 0);
    CHECK(two[1] == 3);  // x=9 is farthest from x=0

    std::vector<std::size_t> three = fps(cloud, 3, 0);
    // min-dist to {0,9}: x=2 gives 2, x=1 gives 1 -> third pick is x=2.
    CHECK(three[2] == 2);
}

TEST_CASE("fps equals the exhaustive greedy oracle on random clouds") {
    Rng rng(32);
    for (int trial = 0; trial < 25; ++trial) {
        const std::size_t n = 1 + rng.uniform_index(64);
        const std::size_t m = 1 + rng.uniform_index(n);
        const std::size_t start = rng.uniform_index(n);
        Tensor cloud = rng.gaussian_tensor({n, 3});

        std::vector<std::array<double, 3>> pts(n);
        for (std::size_t i = 0; i < n; ++i)
            for (int c = 0; c < 3; ++c) pts[i][c] = cloud.at(i, c);

        std::vector<std::size_t> got = fps(cloud, m, start);
        std::vector<std::size_t> want = fps_oracle(pts, m, start);
        CHECK(got == want);
    }
}

TEST_CASE("fps validates its arguments") {
    Tensor cloud = collinear_cloud();
    CHECK_THROWS_AS(fps(cloud, 0, 0), RangeError);
    CHECK_THROWS_AS(fps(cloud, 5, 0), RangeError);
    CHECK_THROWS_AS(fps(cloud, 2, 4), RangeError);
    CHECK_THROWS_AS(fps(Tensor({4, 2}), 2, 0), DimensionError);
    Tensor bad = cloud;
    bad.at(1, 1) = std::nan("");
    CHECK_THROWS_AS(fps(bad, 2, 0), NumericError);
}

TEST_CASE("gather_rows picks the selected points") {
    Tensor cloud = collinear_cloud();
    Tensor out = gather_rows(cloud, {3, 0});
    CHECK(out.rows() == 2);
    CHECK(out.at(0, 0) == 9.0);
    CHECK(out.at(1, 0) == 0.0);
    CHECK_THROWS_AS(gather_rows(cloud, {7}), RangeError);
}

TEST_CASE("cloud embedding is invariant to permutation and duplication") {
    Rng rng(33);
    CloudEncoderConfig cfg;
    cfg.point_hidden = 8;
    cfg.point_features = 12;
    cfg.out_dim = 6;
    CloudEncoder enc = CloudEncoder::make(cfg, rng);

    Tensor cloud = rng.gaussian_tensor({5, 3});
    Tensor base = encode_cloud(enc, cloud);

    Tensor reversed({5, 3});
    for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t c = 0; c < 3; ++c) reversed.at(i, c) = cloud.at(4 - i, c);
    CHECK(max_abs_diff(encode_cloud(enc, reversed), base) == 0.0);

    Tensor doubled({10, 3});
    for (std::size_t i = 0; i < 10; ++i)
        for (std::size_t c = 0; c < 3; ++c) doubled.at(i, c) = cloud.at(i % 5, c);
    CHECK(max_abs_diff(encode_cloud(enc, doubled), base) == 0.0);
}

TEST_CASE("pooling over a single point is the per-point output") {
    Rng rng(34);
    CloudEncoderConfig cfg;
    cfg.point_hidden = 8;
    cfg.point_features = 12;
    cfg.out_dim = 6;
    CloudEncoder enc = CloudEncoder::make(cfg, rng);

    Tensor point = rng.gaussian_tensor({1, 3});
    Tensor features = numcore::mlp_forward(enc.point_mlp, point);
    Tensor expect = numcore::dense_forward(enc.head, features);
    CHECK(max_abs_diff(encode_cloud(enc, point), numcore::row(expect, 0)) == 0.0);
}

TEST_CASE("encode_batch matches per-frame encoding") {
    Rng rng(35);
    CloudEncoderConfig cfg;
    cfg.point_hidden = 8;
    cfg.point_features = 12;
    cfg.out_dim = 6;
    CloudEncoder enc = CloudEncoder::make(cfg, rng);

    Tensor frame_a = rng.gaussian_tensor({4, 3});
    Tensor frame_b = rng.gaussian_tensor({4, 3});
    Tensor stacked({8, 3});
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t c = 0; c < 3; ++c) {
            stacked.at(i, c) = frame_a.at(i, c);
            stacked.at(4 + i, c) = frame_b.at(i, c);
        }

    Tensor out = encode_batch(enc, stacked, 4);
    REQUIRE(out.rows() == 2);
    CHECK(max_abs_diff(numcore::row(out, 0), encode_cloud(enc, frame_a)) == 0.0);
    CHECK(max_abs_diff(numcore::row(out, 1), encode_cloud(enc, frame_b)) == 0.0);

    CHECK_THROWS_AS(encode_batch(enc, stacked, 3), DimensionError);
    CHECK_THROWS_AS(encode_batch(enc, Tensor({0, 3}), 4), RangeError);
    CHECK_THROWS_AS(encode_cloud(enc, Tensor({0, 3})), RangeError);
}

TEST_CASE("encoder gradients match finite differences through the max-pool") {
    Rng rng(36);
    CloudEncoderConfig cfg;
    cfg.point_hidden = 6;
    cfg.point_features = 8;
    cfg.out_dim = 4;
    CloudEncoder enc = CloudEncoder::make(cfg, rng);
    Tensor points = rng.gaussian_tensor({6, 3});  // 2 frames x 3 points

    auto forward_loss = [&]() {
        Tensor out = encode_batch(enc, points, 3);
        return numcore::squared_norm(out);
    };

    EncoderCache cache;
    Tensor out = encode_batch(enc, points, 3, &cache);
    std::vector<Tensor> grads;
    for (const Tensor* p : std::as_const(enc).params()) grads.emplace_back(p->shape());
    encoder_backward(enc, cache, numcore::scale(out, 2.0), grads);

    CHECK(numcore::grad_check(enc.params(), forward_loss, grads, 1e-5) <= 1e-4);
}

TEST_CASE("encoder backward validates cache and shapes") {
    Rng rng(37);
    CloudEncoderConfig cfg;
    CloudEncoder enc = CloudEncoder::make(cfg, rng);
    CloudEncoder other = CloudEncoder::make(cfg, rng);
    EncoderCache cache;
    Tensor out = encode_batch(enc, rng.gaussian_tensor({4, 3}), 2, &cache);
    std::vector<Tensor> grads;
    for (const Tensor* p : std::as_const(enc).params()) grads.emplace_back(p->shape());
    CHECK_THROWS_AS(encoder_backward(other, cache, out, grads), ContractError);
    CHECK_THROWS_AS(encoder_backward(enc, cache, Tensor({2, 3}), grads), DimensionError);
}

TEST_CASE("normalizer endpoints and symmetry") {
    Tensor rows({2, 1}, {-2.0, 2.0});
    Normalizer norm = fit_normalizer(rows);
    CHECK(normalize(norm, Tensor::vec({0.0}))[0] == 0.0);
    CHECK(normalize(norm, Tensor::vec({2.0}))[0] == 1.0);
    CHECK(normalize(norm, Tensor::vec({-2.0}))[0] == -1.0);
    // Out-of-range inputs extrapolate rather than clip.
    CHECK(normalize(norm, Tensor::vec({4.0}))[0] == 2.0);
}

TEST_CASE("normalizer round-trips within 1e-12") {
    Rng rng(38);
    Tensor data = rng.uniform_tensor({20, 5}, -3.0, 7.0);
    Normalizer norm = fit_normalizer(data);

    Tensor x = rng.uniform_tensor({5}, -3.0, 7.0);
    CHECK(max_abs_diff(denormalize(norm, normalize(norm, x)), x) <= 1e-12);

    Tensor xm = rng.uniform_tensor({4, 5}, -3.0, 7.0);
    Tensor back = denormalize(norm, normalize(norm, xm));
    CHECK(max_abs_diff(back, xm) <= 1e-12);

    // Fitted extremes map exactly onto the interval ends.
    Tensor ylo = normalize(norm, norm.lo);
    Tensor yhi = normalize(norm, norm.hi);
    for (std::size_t j = 0; j < 5; ++j) {
        CHECK(ylo[j] == -1.0);
        CHECK(yhi[j] == 1.0);
    }
}

TEST_CASE("normalizer degenerate dimensions") {
    Tensor rows({3, 2}, {1.0, 5.0, 1.0, 6.0, 1.0, 7.0});
    Normalizer norm = fit_normalizer(rows);
    Tensor y = normalize(norm, Tensor::vec({1.0, 6.0}));
    CHECK(y[0] == 0.0);
    Tensor back = denormalize(norm, y);
    CHECK(back[0] == 1.0);
    CHECK(std::fabs(back[1] - 6.0) <= 1e-12);
}

TEST_CASE("normalizer validates inputs") {
    CHECK_THROWS_AS(fit_normalizer(Tensor({0, 3})), ContractError);
    CHECK_THROWS_AS(fit_normalizer(Tensor::vec({1.0})), ContractError);
    Normalizer norm = fit_normalizer(Tensor({2, 2}, {0, 0, 1, 1}));
    CHECK_THROWS_AS(normalize(norm, Tensor::vec({1.0, 2.0, 3.0})), DimensionError);
    Normalizer unfitted;
    CHECK_THROWS_AS(normalize(unfitted, Tensor::vec({1.0})), ContractError);
}

TEST_CASE("canonical_start picks the lexicographically smallest point") {
    const Tensor cloud({4, 3}, {1, 0, 0, -2, 3, 1, -2, 2, 5, 0, 0, 0});
    CHECK(canonical_start(cloud) == 2);  // (-2,2,5) beats (-2,3,1) on y

    const Tensor dup({4, 3}, {5, 5, 5, -1, -1, -1, 3, 3, 3, -1, -1, -1});
    CHECK(canonical_start(dup) == 1);  // exact tie: lowest index

    CHECK_THROWS_AS(canonical_start(Tensor({0, 3})), RangeError);
    CHECK_THROWS_AS(canonical_start(Tensor({2, 2})), DimensionError);
    CHECK_THROWS_AS(canonical_start(Tensor::vec({1.0, 2.0, 3.0})), DimensionError);
}

TEST_CASE("fps from the canonical start is independent of row order") {
    Rng rng(404);
    for (int rep = 0; rep < 20; ++rep) {
        const std::size_t n = 10 + rng.uniform_index(30);
        const Tensor cloud = rng.gaussian_tensor({n, 3});
        std::vector<std::size_t> perm(n);
        std::iota(perm.begin(), perm.end(), 0);
        for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[rng.uniform_index(i)]);
        const Tensor shuffled = gather_rows(cloud, perm);

        const std::size_t m = 1 + rng.uniform_index(n);
        const Tensor a = gather_rows(cloud, fps(cloud, m, canonical_start(cloud)));
        const Tensor b = gather_rows(shuffled, fps(shuffled, m, canonical_start(shuffled)));
        // Same coordinates in the same greedy order, independent of row order.
        for (std::size_t r = 0; r < m; ++r)
            for (std::size_t c = 0; c < 3; ++c) CHECK(a.at(r, c) == b.at(r, c));
    }
}
