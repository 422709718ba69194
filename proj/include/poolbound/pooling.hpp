#pragma once

#include <cstddef>
#include <optional>

#include "poolbound/linalg.hpp"

namespace poolbound::pooling {

using linalg::Matrix;
using linalg::Vector;

enum class PoolKind { Avg, Sum, Max, Last, WeightedAvg, Attention };

const char* pool_name(PoolKind kind);
bool is_learnable(PoolKind kind);

/// Parameters of the two learnable operators. Weighted-average weights are
/// softmax(wavg_logits), so they always lie on the n-simplex.
struct PoolParams {
    std::optional<Vector> wavg_logits;  // length n, WeightedAvg only
    std::optional<Vector> attn_query;   // length d, Attention only
};

/// Gradients carried in the same shape as the parameters they refer to.
using PoolParamGrad = PoolParams;

Vector pool(const Matrix& z, PoolKind kind, const PoolParams* params = nullptr);

/// Multiplicative factor the pooling operator contributes to the expressivity
/// bound: 1/sqrt(n), sqrt(n), 1, sqrt(min(n,d)). No closed form exists for the
/// learnable kinds.
double pooling_factor(PoolKind kind, std::size_t n, std::size_t d);

/// Spectral norm of the explicit 1 x n pooling matrix (Avg, Sum, Last only);
/// must coincide with pooling_factor.
double pooling_matrix_norm_check(PoolKind kind, std::size_t n);

/// Exact gradient of <upstream, pool(z)> with respect to the learnable
/// parameters, chained through the softmax.
PoolParamGrad pool_param_grad(const Matrix& z, PoolKind kind, const PoolParams& params,
                              const Vector& upstream);

}  // namespace poolbound::pooling
