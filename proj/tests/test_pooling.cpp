#include <cmath>
#include <doctest.h>

#include "oracles.hpp"
#include "poolbound/pooling.hpp"

using namespace poolbound;
using linalg::Matrix;
using linalg::RngStream;
using linalg::Vector;
using pooling::PoolKind;
using pooling::PoolParams;

namespace {

Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    Matrix m(rows.size(), rows.begin()->size());
    std::size_t i = 0;
    for (const auto& row : rows) {
        std::size_t j = 0;
        for (double v : row) m(i, j++) = v;
        ++i;
    }
    return m;
}

}  // namespace

TEST_CASE("constant rows collapse every operator to the row") {
    Matrix z(5, 3);
    const Vector row{1.5, -0.25, 2.0};
    for (std::size_t i = 0; i < 5; ++i) z.set_row(i, row);

    PoolParams params;
    params.wavg_logits = Vector{0.4, -1.0, 2.0, 0.0, 0.3};
    params.attn_query = Vector{1.0, 0.5, -2.0};

    for (PoolKind kind : {PoolKind::Avg, PoolKind::Last, PoolKind::Max}) {
        const Vector out = pooling::pool(z, kind);
        for (std::size_t j = 0; j < 3; ++j)
            CHECK(out[j] == doctest::Approx(row[j]).epsilon(1e-14));
    }
    for (PoolKind kind : {PoolKind::WeightedAvg, PoolKind::Attention}) {
        const Vector out = pooling::pool(z, kind, &params);
        for (std::size_t j = 0; j < 3; ++j)
            CHECK(out[j] == doctest::Approx(row[j]).epsilon(1e-12));
    }
    const Vector sum = pooling::pool(z, PoolKind::Sum);
    for (std::size_t j = 0; j < 3; ++j)
        CHECK(sum[j] == doctest::Approx(5.0 * row[j]).epsilon(1e-14));
}

TEST_CASE("hand-computed fixed pooling values") {
    const Matrix z = from_rows({{1.0, -2.0}, {3.0, 0.0}});
    const Vector avg = pooling::pool(z, PoolKind::Avg);
    CHECK(avg[0] == 2.0);
    CHECK(avg[1] == -1.0);
    const Vector sum = pooling::pool(z, PoolKind::Sum);
    CHECK(sum[0] == 4.0);
    CHECK(sum[1] == -2.0);
    const Vector mx = pooling::pool(z, PoolKind::Max);
    CHECK(mx[0] == 3.0);
    CHECK(mx[1] == 0.0);
    const Vector last = pooling::pool(z, PoolKind::Last);
    CHECK(last[0] == 3.0);
    CHECK(last[1] == 0.0);
}

TEST_CASE("uniform logits reduce weighted average to plain average") {
    RngStream rng(41, 0);
    const Matrix z = linalg::gaussian_matrix(6, 4, rng);
    PoolParams params;
    params.wavg_logits = Vector(6, 0.7);
    const Vector wavg = pooling::pool(z, PoolKind::WeightedAvg, &params);
    const Vector avg = pooling::pool(z, PoolKind::Avg);
    for (std::size_t j = 0; j < 4; ++j)
        CHECK(wavg[j] == doctest::Approx(avg[j]).epsilon(1e-12));
}

TEST_CASE("attention pooling with a zero query equals average pooling") {
    RngStream rng(42, 0);
    const Matrix z = linalg::gaussian_matrix(5, 3, rng);
    PoolParams params;
    params.attn_query = Vector(3, 0.0);
    const Vector attn = pooling::pool(z, PoolKind::Attention, &params);
    const Vector avg = pooling::pool(z, PoolKind::Avg);
    for (std::size_t j = 0; j < 3; ++j)
        CHECK(attn[j] == doctest::Approx(avg[j]).epsilon(1e-14));
}

TEST_CASE("pooling factors from the closed forms") {
    CHECK(pooling::pooling_factor(PoolKind::Avg, 16, 4) == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(pooling::pooling_factor(PoolKind::Last, 3, 4) == 1.0);
    CHECK(pooling::pooling_factor(PoolKind::Last, 999, 4) == 1.0);
    CHECK(pooling::pooling_factor(PoolKind::Max, 16, 8) ==
          doctest::Approx(std::sqrt(8.0)).epsilon(1e-15));
    CHECK(pooling::pooling_factor(PoolKind::Sum, 9, 2) == doctest::Approx(3.0).epsilon(1e-15));
    CHECK_THROWS_AS(pooling::pooling_factor(PoolKind::WeightedAvg, 4, 4), UnsupportedError);
    CHECK_THROWS_AS(pooling::pooling_factor(PoolKind::Attention, 4, 4), UnsupportedError);
}

TEST_CASE("explicit pooling matrices reproduce the factors") {
    CHECK(pooling::pooling_matrix_norm_check(PoolKind::Avg, 4) ==
          doctest::Approx(0.5).epsilon(1e-13));
    CHECK(pooling::pooling_matrix_norm_check(PoolKind::Sum, 9) ==
          doctest::Approx(3.0).epsilon(1e-13));
    CHECK(pooling::pooling_matrix_norm_check(PoolKind::Last, 7) ==
          doctest::Approx(1.0).epsilon(1e-13));
    for (std::size_t n : {1, 2, 4, 16, 64})
        for (PoolKind kind : {PoolKind::Avg, PoolKind::Sum, PoolKind::Last})
            CHECK(std::abs(pooling::pooling_matrix_norm_check(kind, n) -
                           pooling::pooling_factor(kind, n, 3)) <= 1e-12);
    CHECK_THROWS_AS(pooling::pooling_matrix_norm_check(PoolKind::Max, 4), UnsupportedError);
}

TEST_CASE("max pooling contraction against the frobenius and rank bounds") {
    RngStream master(43, 0);
    const std::size_t n = 6, d = 4;
    for (std::size_t t = 0; t < 500; ++t) {
        RngStream rng = master.child(t);
        const Matrix z = linalg::gaussian_matrix(n, d, rng);
        const Matrix zt = linalg::gaussian_matrix(n, d, rng);
        const Vector a = pooling::pool(z, PoolKind::Max);
        const Vector b = pooling::pool(zt, PoolKind::Max);
        Vector diff(d);
        for (std::size_t j = 0; j < d; ++j) diff[j] = a[j] - b[j];
        const double frob = linalg::frobenius_norm(z - zt);
        CHECK(linalg::norm2(diff) <= frob * (1.0 + 1e-12));
        CHECK(frob <= std::sqrt(static_cast<double>(std::min(n, d))) *
                          linalg::spectral_norm(z - zt) * (1.0 + 1e-9));
    }
}

TEST_CASE("sum pooling is n times average pooling at any n") {
    RngStream master(48, 0);
    for (std::size_t n : {2, 3, 5, 7, 12}) {
        RngStream rng = master.child(n);
        const Matrix z = linalg::gaussian_matrix(n, 4, rng);
        const Vector avg = pooling::pool(z, PoolKind::Avg);
        const Vector sum = pooling::pool(z, PoolKind::Sum);
        for (std::size_t j = 0; j < 4; ++j)
            CHECK(std::abs(sum[j] - static_cast<double>(n) * avg[j]) <=
                  1e-12 * std::max(1.0, std::abs(sum[j])));
    }
}

TEST_CASE("fixed non-max pooling is linear") {
    RngStream master(44, 0);
    for (std::size_t t = 0; t < 100; ++t) {
        RngStream rng = master.child(t);
        const Matrix z = linalg::gaussian_matrix(5, 3, rng);
        const Matrix zt = linalg::gaussian_matrix(5, 3, rng);
        const double alpha = rng.uniform(-2.0, 2.0);
        const double beta = rng.uniform(-2.0, 2.0);
        Matrix combo = alpha * z + beta * zt;
        for (PoolKind kind : {PoolKind::Avg, PoolKind::Sum, PoolKind::Last}) {
            const Vector lhs = pooling::pool(combo, kind);
            const Vector pz = pooling::pool(z, kind);
            const Vector pzt = pooling::pool(zt, kind);
            for (std::size_t j = 0; j < 3; ++j)
                CHECK(std::abs(lhs[j] - (alpha * pz[j] + beta * pzt[j])) <=
                      1e-12 * std::max(1.0, std::abs(lhs[j])));
        }
    }
}

TEST_CASE("weighted average stays inside the convex hull of rows") {
    RngStream master(45, 0);
    for (std::size_t t = 0; t < 100; ++t) {
        RngStream rng = master.child(t);
        const Matrix z = linalg::gaussian_matrix(7, 3, rng);
        PoolParams params;
        Vector logits(7);
        for (double& v : logits) v = rng.gaussian();
        params.wavg_logits = logits;

        const Vector w = linalg::softmax(*params.wavg_logits);
        double wsum = 0.0;
        for (double v : w) wsum += v;
        CHECK(std::abs(wsum - 1.0) <= 1e-12);

        const Vector out = pooling::pool(z, PoolKind::WeightedAvg, &params);
        for (std::size_t j = 0; j < 3; ++j) {
            double lo = z(0, j), hi = z(0, j);
            for (std::size_t i = 1; i < 7; ++i) {
                lo = std::min(lo, z(i, j));
                hi = std::max(hi, z(i, j));
            }
            CHECK(out[j] >= lo - 1e-12);
            CHECK(out[j] <= hi + 1e-12);
        }
    }
}

TEST_CASE("missing learnable parameters are configuration errors") {
    const Matrix z = from_rows({{1.0, 2.0}, {3.0, 4.0}});
    CHECK_THROWS_AS(pooling::pool(z, PoolKind::WeightedAvg), ConfigError);
    CHECK_THROWS_AS(pooling::pool(z, PoolKind::Attention), ConfigError);
    PoolParams wrong;
    wrong.wavg_logits = Vector{1.0, 2.0, 3.0};  // length 3, but n = 2
    CHECK_THROWS_AS(pooling::pool(z, PoolKind::WeightedAvg, &wrong), ConfigError);
}

TEST_CASE("parameter gradients: trivial cases") {
    RngStream rng(46, 0);
    const Matrix z = linalg::gaussian_matrix(4, 3, rng);
    PoolParams params;
    params.wavg_logits = Vector{0.1, -0.2, 0.3, 0.4};

    SUBCASE("zero upstream gives zero gradient") {
        const auto grad = pooling::pool_param_grad(z, PoolKind::WeightedAvg, params,
                                                   Vector(3, 0.0));
        for (double g : *grad.wavg_logits) CHECK(g == 0.0);
    }

    SUBCASE("identical rows make the weighted average constant in its weights") {
        Matrix same(4, 3);
        for (std::size_t i = 0; i < 4; ++i) same.set_row(i, {1.0, 2.0, 3.0});
        const auto grad = pooling::pool_param_grad(same, PoolKind::WeightedAvg, params,
                                                   Vector{0.3, -0.5, 0.9});
        for (double g : *grad.wavg_logits) CHECK(std::abs(g) <= 1e-14);
    }

    SUBCASE("non-learnable kinds are rejected") {
        CHECK_THROWS_AS(
            pooling::pool_param_grad(z, PoolKind::Avg, params, Vector(3, 1.0)),
            UnsupportedError);
    }
}

TEST_CASE("parameter gradients match central differences") {
    RngStream rng(47, 0);
    const Matrix z = linalg::gaussian_matrix(5, 4, rng);
    Vector upstream(4);
    for (double& v : upstream) v = rng.gaussian();
    const double step = 1e-6;

    SUBCASE("weighted average") {
        PoolParams params;
        Vector logits(5);
        for (double& v : logits) v = rng.gaussian();
        params.wavg_logits = logits;
        const auto grad =
            pooling::pool_param_grad(z, PoolKind::WeightedAvg, params, upstream);
        for (std::size_t i = 0; i < 5; ++i) {
            PoolParams up = params, down = params;
            (*up.wavg_logits)[i] += step;
            (*down.wavg_logits)[i] -= step;
            const double fd =
                (linalg::dot(upstream, pooling::pool(z, PoolKind::WeightedAvg, &up)) -
                 linalg::dot(upstream, pooling::pool(z, PoolKind::WeightedAvg, &down))) /
                (2.0 * step);
            CHECK(std::abs(fd - (*grad.wavg_logits)[i]) <=
                  1e-6 * std::max(1.0, std::abs((*grad.wavg_logits)[i])));
        }
    }

    SUBCASE("attention query") {
        PoolParams params;
        Vector query(4);
        for (double& v : query) v = rng.gaussian();
        params.attn_query = query;
        const auto grad = pooling::pool_param_grad(z, PoolKind::Attention, params, upstream);
        for (std::size_t i = 0; i < 4; ++i) {
            PoolParams up = params, down = params;
            (*up.attn_query)[i] += step;
            (*down.attn_query)[i] -= step;
            const double fd =
                (linalg::dot(upstream, pooling::pool(z, PoolKind::Attention, &up)) -
                 linalg::dot(upstream, pooling::pool(z, PoolKind::Attention, &down))) /
                (2.0 * step);
            CHECK(std::abs(fd - (*grad.attn_query)[i]) <=
                  1e-6 * std::max(1.0, std::abs((*grad.attn_query)[i])));
        }
    }
}
