#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "poolbound/errors.hpp"

namespace poolbound::linalg {

using Vector = std::vector<double>;

/// Dense row-major matrix of doubles. Every exported operation in this
/// library keeps entries finite; validate() is the hook that enforces it.
class Matrix {
  public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static Matrix identity(std::size_t n);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    Vector row(std::size_t r) const;
    void set_row(std::size_t r, const Vector& v);

    bool same_shape(const Matrix& other) const {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }
    bool operator==(const Matrix& other) const = default;

  private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

Matrix operator*(const Matrix& a, const Matrix& b);
Matrix operator+(const Matrix& a, const Matrix& b);
Matrix operator-(const Matrix& a, const Matrix& b);
Matrix operator*(double s, const Matrix& m);
Matrix transpose(const Matrix& m);
Matrix hconcat(const std::vector<Matrix>& parts);

Vector matvec(const Matrix& m, const Vector& v);
// v^T m, i.e. weights over rows of m.
Vector vecmat(const Vector& v, const Matrix& m);
double dot(const Vector& a, const Vector& b);
double norm2(const Vector& v);

bool all_finite(const Matrix& m);
// Throws InvalidInputError on empty or non-finite matrices.
void validate(const Matrix& m, const char* what);

/// Largest singular value via power iteration on m^T m. Seeded random start,
/// capped at 200 sweeps or a 1e-12 relative change in the Rayleigh quotient.
double spectral_norm(const Matrix& m);

double frobenius_norm(const Matrix& m);

/// Row-wise softmax, stabilized by subtracting the row max before exponentiating.
Matrix softmax_rows(const Matrix& m);
Vector softmax(const Vector& v);

/// Jacobian of softmax at a probability vector p: diag(p) - p p^T.
/// Rejects p that is off the simplex by more than 1e-9.
Matrix softmax_jacobian(const Vector& p);

/// Principal branch of the Lambert W function for x >= 0, solving w e^w = x.
/// Halley iteration from a log-based initial guess; residual <= 1e-10 max(1,x).
double lambert_w0(double x);

/// Deterministic counter-based random stream. A stream is fully identified by
/// (seed, stream_index): the state is derived by mixing both through a
/// splitmix-style finalizer, so draw sequences are independent of how other
/// streams are used. Do not share one instance across concurrent tasks;
/// derive a child stream per task instead.
class RngStream {
  public:
    RngStream(std::uint64_t seed, std::uint64_t stream_index = 0);

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream_index() const { return stream_; }

    /// New stream with an index derived from this stream's index and k.
    RngStream child(std::uint64_t k) const;

    std::uint64_t next_u64();
    double uniform01();                       // [0, 1)
    double uniform(double lo, double hi);
    double gaussian();                        // standard normal, Box-Muller

  private:
    std::uint64_t seed_ = 0;
    std::uint64_t stream_ = 0;
    std::uint64_t state_ = 0;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

Matrix gaussian_matrix(std::size_t rows, std::size_t cols, RngStream& rng);

}  // namespace poolbound::linalg
