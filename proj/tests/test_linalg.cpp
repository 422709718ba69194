#include <cmath>
#include <doctest.h>

#include "oracles.hpp"
#include "poolbound/linalg.hpp"

using namespace poolbound;
using linalg::Matrix;
using linalg::RngStream;
using linalg::Vector;

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

TEST_CASE("spectral norm of identity and diagonal matrices") {
    CHECK(linalg::spectral_norm(Matrix::identity(3)) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(linalg::spectral_norm(from_rows({{2.0, 0.0}, {0.0, 0.5}})) ==
          doctest::Approx(2.0).epsilon(1e-12));
    CHECK(linalg::spectral_norm(Matrix(4, 4)) == 0.0);
}

TEST_CASE("spectral norm matches the Jacobi SVD oracle") {
    RngStream rng(123, 0);
    const Matrix m = linalg::gaussian_matrix(8, 8, rng);
    const double oracle = oracles::jacobi_spectral_norm(m);
    CHECK(std::abs(linalg::spectral_norm(m) - oracle) <= 1e-9 * oracle);
}

TEST_CASE("spectral norm vs oracle across sizes up to 64") {
    RngStream master(7, 0);
    for (std::size_t size : {2, 5, 16, 33, 64}) {
        RngStream rng = master.child(size);
        const Matrix m = linalg::gaussian_matrix(size, size, rng);
        const double oracle = oracles::jacobi_spectral_norm(m);
        CHECK(std::abs(linalg::spectral_norm(m) - oracle) <= 1e-9 * oracle);
    }
    // rectangular shapes too
    RngStream rng_a = master.child(1001);
    const Matrix tall = linalg::gaussian_matrix(64, 16, rng_a);
    CHECK(std::abs(linalg::spectral_norm(tall) - oracles::jacobi_spectral_norm(tall)) <=
          1e-9 * oracles::jacobi_spectral_norm(tall));
    RngStream rng_b = master.child(1002);
    const Matrix wide = linalg::gaussian_matrix(3, 40, rng_b);
    CHECK(std::abs(linalg::spectral_norm(wide) - oracles::jacobi_spectral_norm(wide)) <=
          1e-9 * oracles::jacobi_spectral_norm(wide));
}

TEST_CASE("spectral norm rejects non-finite input") {
    Matrix m(2, 2);
    m(0, 0) = std::nan("");
    CHECK_THROWS_AS(linalg::spectral_norm(m), InvalidInputError);
}

TEST_CASE("frobenius norm basics") {
    CHECK(linalg::frobenius_norm(Matrix(3, 5)) == 0.0);
    CHECK(linalg::frobenius_norm(from_rows({{3.0, 4.0}})) == doctest::Approx(5.0));
}

TEST_CASE("norm inequality chain on random matrices") {
    RngStream master(99, 0);
    for (std::size_t t = 0; t < 50; ++t) {
        RngStream rng = master.child(t);
        const std::size_t rows = 2 + rng.next_u64() % 12;
        const std::size_t cols = 2 + rng.next_u64() % 12;
        const Matrix m = linalg::gaussian_matrix(rows, cols, rng);
        const double spec = linalg::spectral_norm(m);
        const double frob = linalg::frobenius_norm(m);
        CHECK(spec <= frob * (1.0 + 1e-12));
        CHECK(frob <=
              std::sqrt(static_cast<double>(std::min(rows, cols))) * spec * (1.0 + 1e-9));
    }
}

TEST_CASE("softmax rows: symmetry, stabilization, analytic value") {
    const Matrix uniform = linalg::softmax_rows(Matrix(1, 3));
    for (std::size_t j = 0; j < 3; ++j)
        CHECK(uniform(0, j) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));

    const Matrix big = linalg::softmax_rows(from_rows({{1000.0, 0.0}}));
    CHECK(big(0, 0) == doctest::Approx(1.0));
    CHECK(big(0, 1) < 1e-300);
    CHECK(linalg::all_finite(big));

    const Matrix analytic = linalg::softmax_rows(from_rows({{std::log(2.0), 0.0}}));
    CHECK(analytic(0, 0) == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
    CHECK(analytic(0, 1) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
}

TEST_CASE("softmax rows sum to one for large-magnitude entries") {
    RngStream master(5, 0);
    for (std::size_t t = 0; t < 200; ++t) {
        RngStream rng = master.child(t);
        Matrix m(4, 9);
        for (double& v : m.data()) v = rng.uniform(-1e4, 1e4);
        const Matrix p = linalg::softmax_rows(m);
        for (std::size_t i = 0; i < p.rows(); ++i) {
            double sum = 0.0;
            for (std::size_t j = 0; j < p.cols(); ++j) {
                CHECK(p(i, j) >= 0.0);
                sum += p(i, j);
            }
            CHECK(std::abs(sum - 1.0) <= 1e-12);
        }
    }
}

TEST_CASE("softmax jacobian at simplex vertex and midpoint") {
    const Matrix vertex = linalg::softmax_jacobian({1.0, 0.0});
    for (double v : vertex.data()) CHECK(v == 0.0);

    const Matrix mid = linalg::softmax_jacobian({0.5, 0.5});
    CHECK(mid(0, 0) == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(mid(0, 1) == doctest::Approx(-0.25).epsilon(1e-15));
    CHECK(mid(1, 0) == doctest::Approx(-0.25).epsilon(1e-15));
    CHECK(mid(1, 1) == doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("softmax jacobian: symmetric, rows sum to zero, norm at most 2") {
    RngStream master(31, 0);
    for (std::size_t t = 0; t < 1000; ++t) {
        RngStream rng = master.child(t);
        const std::size_t dim = 2 + rng.next_u64() % 63;
        Vector logits(dim);
        for (double& v : logits) v = rng.gaussian() * 2.0;
        const Vector p = linalg::softmax(logits);
        const Matrix jac = linalg::softmax_jacobian(p);
        for (std::size_t i = 0; i < dim; ++i) {
            double row_sum = 0.0;
            for (std::size_t j = 0; j < dim; ++j) {
                row_sum += jac(i, j);
                CHECK(jac(i, j) == jac(j, i));
            }
            CHECK(std::abs(row_sum) <= 1e-12);
        }
        if (t % 37 == 0) CHECK(linalg::spectral_norm(jac) <= 2.0 + 1e-9);
    }
}

TEST_CASE("softmax jacobian rejects off-simplex input") {
    CHECK_THROWS_AS(linalg::softmax_jacobian({0.7, 0.7}), InvalidInputError);
    CHECK_THROWS_AS(linalg::softmax_jacobian({1.5, -0.5}), InvalidInputError);
}

TEST_CASE("lambert w0 at the classic points") {
    CHECK(linalg::lambert_w0(0.0) == 0.0);
    CHECK(linalg::lambert_w0(std::exp(1.0)) == doctest::Approx(1.0).epsilon(1e-12));
    const double x = 64.0 / std::exp(1.0);
    const double w = linalg::lambert_w0(x);
    CHECK(std::abs(w * std::exp(w) - x) <= 1e-10 * std::max(1.0, x));
    CHECK_THROWS_AS(linalg::lambert_w0(-0.5), std::domain_error);
}

TEST_CASE("lambert w0 residual on a log grid") {
    for (int i = 0; i < 40; ++i) {
        const double x = std::pow(10.0, -6.0 + 12.0 * i / 39.0);
        const double w = linalg::lambert_w0(x);
        CHECK(std::abs(w * std::exp(w) - x) <= 1e-10 * std::max(1.0, x));
    }
}

TEST_CASE("rng streams: deterministic, stream-separated") {
    RngStream a(42, 7);
    RngStream b(42, 7);
    Matrix ma = linalg::gaussian_matrix(5, 5, a);
    Matrix mb = linalg::gaussian_matrix(5, 5, b);
    CHECK(ma == mb);

    RngStream c(42, 8);
    Matrix mc = linalg::gaussian_matrix(5, 5, c);
    CHECK(ma.data() != mc.data());

    // draws on one stream do not disturb another
    RngStream d(42, 7);
    RngStream other(42, 1234);
    (void)other.gaussian();
    (void)other.gaussian();
    Matrix md = linalg::gaussian_matrix(5, 5, d);
    CHECK(ma == md);
}

TEST_CASE("gaussian matrix moments") {
    RngStream rng(2718, 0);
    const Matrix m = linalg::gaussian_matrix(100, 100, rng);
    double mean = 0.0;
    for (double v : m.data()) mean += v;
    mean /= static_cast<double>(m.data().size());
    double var = 0.0;
    for (double v : m.data()) var += (v - mean) * (v - mean);
    var /= static_cast<double>(m.data().size() - 1);
    CHECK(std::abs(mean) <= 0.05);
    CHECK(std::abs(var - 1.0) <= 0.05);
}
