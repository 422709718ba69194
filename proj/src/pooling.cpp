#include "poolbound/pooling.hpp"

#include <algorithm>
#include <cmath>

namespace poolbound::pooling {

const char* pool_name(PoolKind kind) {
    switch (kind) {
        case PoolKind::Avg: return "avg";
        case PoolKind::Sum: return "sum";
        case PoolKind::Max: return "max";
        case PoolKind::Last: return "last";
        case PoolKind::WeightedAvg: return "wavg";
        case PoolKind::Attention: return "attn";
    }
    return "?";
}

bool is_learnable(PoolKind kind) {
    return kind == PoolKind::WeightedAvg || kind == PoolKind::Attention;
}

namespace {

Vector column_sums(const Matrix& z) {
    Vector out(z.cols(), 0.0);
    for (std::size_t i = 0; i < z.rows(); ++i)
        for (std::size_t j = 0; j < z.cols(); ++j) out[j] += z(i, j);
    return out;
}

const Vector& require_wavg_logits(const Matrix& z, const PoolParams* params) {
    if (params == nullptr || !params->wavg_logits.has_value())
        throw ConfigError("weighted-average pooling requires wavg_logits");
    if (params->wavg_logits->size() != z.rows())
        throw ConfigError("wavg_logits length must equal the token count");
    return *params->wavg_logits;
}

const Vector& require_attn_query(const Matrix& z, const PoolParams* params) {
    if (params == nullptr || !params->attn_query.has_value())
        throw ConfigError("attention pooling requires attn_query");
    if (params->attn_query->size() != z.cols())
        throw ConfigError("attn_query length must equal the embedding dimension");
    return *params->attn_query;
}

Vector attention_weights(const Matrix& z, const Vector& query) {
    Vector scores = linalg::matvec(z, query);
    const double scale = 1.0 / std::sqrt(static_cast<double>(z.cols()));
    for (double& s : scores) s *= scale;
    return linalg::softmax(scores);
}

}  // namespace

Vector pool(const Matrix& z, PoolKind kind, const PoolParams* params) {
    linalg::validate(z, "pool");
    const std::size_t n = z.rows();
    switch (kind) {
        case PoolKind::Avg: {
            Vector out = column_sums(z);
            for (double& x : out) x /= static_cast<double>(n);
            return out;
        }
        case PoolKind::Sum:
            return column_sums(z);
        case PoolKind::Max: {
            Vector out = z.row(0);
            for (std::size_t i = 1; i < n; ++i)
                for (std::size_t j = 0; j < z.cols(); ++j)
                    out[j] = std::max(out[j], z(i, j));
            return out;
        }
        case PoolKind::Last:
            return z.row(n - 1);
        case PoolKind::WeightedAvg: {
            const Vector w = linalg::softmax(require_wavg_logits(z, params));
            return linalg::vecmat(w, z);
        }
        case PoolKind::Attention: {
            const Vector a = attention_weights(z, require_attn_query(z, params));
            return linalg::vecmat(a, z);
        }
    }
    throw InvalidInputError("pool: unknown kind");
}

double pooling_factor(PoolKind kind, std::size_t n, std::size_t d) {
    if (n == 0 || d == 0) throw InvalidInputError("pooling_factor: n, d must be >= 1");
    switch (kind) {
        case PoolKind::Avg: return 1.0 / std::sqrt(static_cast<double>(n));
        case PoolKind::Sum: return std::sqrt(static_cast<double>(n));
        case PoolKind::Last: return 1.0;
        case PoolKind::Max: return std::sqrt(static_cast<double>(std::min(n, d)));
        default:
            throw UnsupportedError("pooling_factor: no closed-form factor for learnable pooling");
    }
}

double pooling_matrix_norm_check(PoolKind kind, std::size_t n) {
    if (n == 0) throw InvalidInputError("pooling_matrix_norm_check: n must be >= 1");
    Matrix w(1, n);
    switch (kind) {
        case PoolKind::Avg:
            for (std::size_t j = 0; j < n; ++j) w(0, j) = 1.0 / static_cast<double>(n);
            break;
        case PoolKind::Sum:
            for (std::size_t j = 0; j < n; ++j) w(0, j) = 1.0;
            break;
        case PoolKind::Last:
            w(0, n - 1) = 1.0;
            break;
        default:
            throw UnsupportedError("pooling_matrix_norm_check: only Avg, Sum, Last act as 1 x n maps");
    }
    return linalg::spectral_norm(w);
}

PoolParamGrad pool_param_grad(const Matrix& z, PoolKind kind, const PoolParams& params,
                              const Vector& upstream) {
    linalg::validate(z, "pool_param_grad");
    if (upstream.size() != z.cols())
        throw InvalidInputError("pool_param_grad: upstream dimension mismatch");

    // c_i = <z_i, upstream>; both gradients chain through (diag(w) - w w^T) c.
    const Vector c = linalg::matvec(z, upstream);

    PoolParamGrad grad;
    switch (kind) {
        case PoolKind::WeightedAvg: {
            const Vector w = linalg::softmax(require_wavg_logits(z, &params));
            const double wc = linalg::dot(w, c);
            Vector g(w.size());
            for (std::size_t i = 0; i < w.size(); ++i) g[i] = w[i] * (c[i] - wc);
            grad.wavg_logits = std::move(g);
            return grad;
        }
        case PoolKind::Attention: {
            const Vector& q = require_attn_query(z, &params);
            const Vector a = attention_weights(z, q);
            const double ac = linalg::dot(a, c);
            Vector t(a.size());
            for (std::size_t i = 0; i < a.size(); ++i) t[i] = a[i] * (c[i] - ac);
            Vector g = linalg::vecmat(t, z);
            const double scale = 1.0 / std::sqrt(static_cast<double>(z.cols()));
            for (double& x : g) x *= scale;
            grad.attn_query = std::move(g);
            return grad;
        }
        default:
            throw UnsupportedError("pool_param_grad: pooling kind has no learnable parameters");
    }
}

}  // namespace poolbound::pooling
