#pragma once

// Test-only oracles, deliberately independent of the library's own
// implementation paths: a dense Jacobi SVD for exact singular values and
// plain scalar-loop recomputations of the attention variants.

#include <vector>

#include "poolbound/linalg.hpp"
#include "poolbound/model.hpp"

namespace oracles {

using poolbound::linalg::Matrix;
using poolbound::linalg::Vector;

/// All singular values via one-sided Jacobi rotations, descending order.
std::vector<double> jacobi_singular_values(Matrix a);
double jacobi_spectral_norm(const Matrix& a);

/// Scaled dot-product attention head recomputed entry by entry.
Matrix attention_head_dot_oracle(const Matrix& x, const poolbound::model::HeadWeights& head,
                                 std::size_t head_dim);

/// L2-kernel attention head recomputed entry by entry.
Matrix attention_head_l2_oracle(const Matrix& x, const poolbound::model::HeadWeights& head,
                                std::size_t head_dim);

/// Scaled cosine similarity attention on one window, scalar loops only.
Matrix attention_head_scsa_oracle(const Matrix& x, const poolbound::model::HeadWeights& head,
                                  const poolbound::model::ScsaParams& p,
                                  std::size_t head_dim);

/// Concatenate-then-project multi-head oracle built on the per-head oracle.
Matrix mha_dot_oracle(const Matrix& x, const poolbound::model::LayerWeights& layer);

}  // namespace oracles
