#include "poolbound/linalg.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace poolbound::linalg {

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Vector Matrix::row(std::size_t r) const {
    return Vector(data_.begin() + r * cols_, data_.begin() + (r + 1) * cols_);
}

void Matrix::set_row(std::size_t r, const Vector& v) {
    for (std::size_t c = 0; c < cols_; ++c) data_[r * cols_ + c] = v[c];
}

Matrix operator*(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows())
        throw InvalidInputError("matmul: inner dimensions disagree");
    Matrix out(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            for (std::size_t j = 0; j < b.cols(); ++j)
                out(i, j) += aik * b(k, j);
        }
    }
    return out;
}

Matrix operator+(const Matrix& a, const Matrix& b) {
    if (!a.same_shape(b)) throw InvalidInputError("matrix add: shape mismatch");
    Matrix out = a;
    for (std::size_t i = 0; i < out.data().size(); ++i) out.data()[i] += b.data()[i];
    return out;
}

Matrix operator-(const Matrix& a, const Matrix& b) {
    if (!a.same_shape(b)) throw InvalidInputError("matrix sub: shape mismatch");
    Matrix out = a;
    for (std::size_t i = 0; i < out.data().size(); ++i) out.data()[i] -= b.data()[i];
    return out;
}

Matrix operator*(double s, const Matrix& m) {
    Matrix out = m;
    for (double& x : out.data()) x *= s;
    return out;
}

Matrix transpose(const Matrix& m) {
    Matrix out(m.cols(), m.rows());
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) out(j, i) = m(i, j);
    return out;
}

Matrix hconcat(const std::vector<Matrix>& parts) {
    if (parts.empty()) throw InvalidInputError("hconcat: no parts");
    std::size_t cols = 0;
    for (const Matrix& p : parts) {
        if (p.rows() != parts.front().rows())
            throw InvalidInputError("hconcat: row counts disagree");
        cols += p.cols();
    }
    Matrix out(parts.front().rows(), cols);
    std::size_t offset = 0;
    for (const Matrix& p : parts) {
        for (std::size_t i = 0; i < p.rows(); ++i)
            for (std::size_t j = 0; j < p.cols(); ++j) out(i, offset + j) = p(i, j);
        offset += p.cols();
    }
    return out;
}

Vector matvec(const Matrix& m, const Vector& v) {
    if (m.cols() != v.size()) throw InvalidInputError("matvec: shape mismatch");
    Vector out(m.rows(), 0.0);
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) out[i] += m(i, j) * v[j];
    return out;
}

Vector vecmat(const Vector& v, const Matrix& m) {
    if (m.rows() != v.size()) throw InvalidInputError("vecmat: shape mismatch");
    Vector out(m.cols(), 0.0);
    for (std::size_t i = 0; i < m.rows(); ++i) {
        const double vi = v[i];
        for (std::size_t j = 0; j < m.cols(); ++j) out[j] += vi * m(i, j);
    }
    return out;
}

double dot(const Vector& a, const Vector& b) {
    if (a.size() != b.size()) throw InvalidInputError("dot: size mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm2(const Vector& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

bool all_finite(const Matrix& m) {
    for (double x : m.data())
        if (!std::isfinite(x)) return false;
    return true;
}

void validate(const Matrix& m, const char* what) {
    if (m.rows() == 0 || m.cols() == 0)
        throw InvalidInputError(std::string(what) + ": empty matrix");
    if (!all_finite(m))
        throw InvalidInputError(std::string(what) + ": non-finite entries");
}

double spectral_norm(const Matrix& m) {
    validate(m, "spectral_norm");
    // Gram matrix G = m^T m; its top eigenvalue is sigma_max^2.
    const Matrix g = transpose(m) * m;
    const std::size_t n = g.rows();

    RngStream rng(0x5eed5eedULL, n);
    Vector v(n);
    for (double& x : v) x = rng.gaussian();
    double vn = norm2(v);
    if (vn == 0.0) v[0] = vn = 1.0;
    for (double& x : v) x /= vn;

    // The Rayleigh quotient of power iterates increases monotonically for a
    // PSD matrix with an asymptotically geometric tail, so the remaining gap
    // can be estimated from the decay ratio of successive increments. A plain
    // per-step-change test stops far too early when the top eigenvalues are
    // close.
    double lambda = 0.0;
    double delta_prev = 0.0;
    for (int iter = 0; iter < 50000; ++iter) {
        const Vector w = matvec(g, v);
        const double lambda_new = dot(v, w);
        const double wn = norm2(w);
        if (wn == 0.0) return 0.0;  // v in the null space: zero matrix or lucky start
        for (std::size_t i = 0; i < n; ++i) v[i] = w[i] / wn;

        const double delta = lambda_new - lambda;
        if (iter > 0) {
            if (delta <= 0.0) {
                lambda = lambda_new;
                break;
            }
            if (delta_prev > 0.0) {
                const double rho = delta / delta_prev;
                if (rho < 1.0 && delta * rho / (1.0 - rho) <= 1e-12 * lambda_new) {
                    lambda = lambda_new;
                    break;
                }
            }
        }
        delta_prev = delta;
        lambda = lambda_new;
    }
    return std::sqrt(std::max(lambda, 0.0));
}

double frobenius_norm(const Matrix& m) {
    validate(m, "frobenius_norm");
    double s = 0.0;
    for (double x : m.data()) s += x * x;
    return std::sqrt(s);
}

Matrix softmax_rows(const Matrix& m) {
    validate(m, "softmax_rows");
    Matrix out(m.rows(), m.cols());
    for (std::size_t i = 0; i < m.rows(); ++i) {
        double mx = m(i, 0);
        for (std::size_t j = 1; j < m.cols(); ++j) mx = std::max(mx, m(i, j));
        double sum = 0.0;
        for (std::size_t j = 0; j < m.cols(); ++j) {
            out(i, j) = std::exp(m(i, j) - mx);
            sum += out(i, j);
        }
        for (std::size_t j = 0; j < m.cols(); ++j) out(i, j) /= sum;
    }
    return out;
}

Vector softmax(const Vector& v) {
    Matrix m(1, v.size());
    for (std::size_t j = 0; j < v.size(); ++j) m(0, j) = v[j];
    return softmax_rows(m).row(0);
}

Matrix softmax_jacobian(const Vector& p) {
    const std::size_t n = p.size();
    if (n == 0) throw InvalidInputError("softmax_jacobian: empty vector");
    double sum = 0.0;
    for (double x : p) {
        if (!std::isfinite(x) || x < -1e-9)
            throw InvalidInputError("softmax_jacobian: input not a probability vector");
        sum += x;
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw InvalidInputError("softmax_jacobian: input does not sum to 1");
    Matrix out(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            out(i, j) = (i == j ? p[i] : 0.0) - p[i] * p[j];
    return out;
}

double lambert_w0(double x) {
    if (!(x >= 0.0)) throw std::domain_error("lambert_w0: x must be non-negative");
    if (x == 0.0) return 0.0;

    // log1p keeps the guess sane on [0, e); for large x, w ~ ln x - ln ln x.
    double w = std::log1p(x);
    if (x > std::numbers::e) {
        const double lx = std::log(x);
        w = lx - std::log(lx);
    }
    for (int iter = 0; iter < 64; ++iter) {
        const double ew = std::exp(w);
        const double f = w * ew - x;
        const double fp = ew * (w + 1.0);
        const double fpp = ew * (w + 2.0);
        const double step = f / (fp - 0.5 * f * fpp / fp);  // Halley
        w -= step;
        if (std::abs(step) <= 1e-16 * std::max(1.0, std::abs(w))) break;
    }
    return w;
}

namespace {

std::uint64_t splitmix_fin(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_index)
    : seed_(seed), stream_(stream_index) {
    state_ = splitmix_fin(splitmix_fin(seed + 0x9E3779B97F4A7C15ULL) ^
                          (stream_index + 0xD1B54A32D192ED03ULL));
}

RngStream RngStream::child(std::uint64_t k) const {
    return RngStream(seed_, splitmix_fin(stream_ * 0xA24BAED4963EE407ULL + k + 1));
}

std::uint64_t RngStream::next_u64() {
    state_ += 0x9E3779B97F4A7C15ULL;
    return splitmix_fin(state_);
}

double RngStream::uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::uniform(double lo, double hi) {
    return lo + (hi - lo) * uniform01();
}

double RngStream::gaussian() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    // Box-Muller; u1 nudged away from 0 so the log is finite.
    const double u1 = (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
}

Matrix gaussian_matrix(std::size_t rows, std::size_t cols, RngStream& rng) {
    if (rows == 0 || cols == 0) throw InvalidInputError("gaussian_matrix: empty shape");
    Matrix out(rows, cols);
    for (double& x : out.data()) x = rng.gaussian();
    return out;
}

}  // namespace poolbound::linalg
