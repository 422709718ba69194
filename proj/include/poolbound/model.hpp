#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "poolbound/linalg.hpp"
#include "poolbound/pooling.hpp"

namespace poolbound::model {

using linalg::Matrix;
using linalg::Vector;

enum class AttentionVariant { DotProduct, L2Tied, Scsa };

const char* variant_name(AttentionVariant v);

/// Per-head projection weights, each of shape d x (d/H).
struct HeadWeights {
    Matrix w_q;
    Matrix w_k;
    Matrix w_v;

    /// L2-variant heads share the query projection as key projection.
    static HeadWeights tied(Matrix w_q, Matrix w_v);
    bool is_tied() const { return w_q == w_k; }
};

struct LayerWeights {
    std::vector<HeadWeights> heads;
    Matrix w_o;    // d x d output projection
    Matrix w_ffn;  // d x d feed-forward weight
};

/// Scaled-cosine-similarity attention hyperparameters.
struct ScsaParams {
    double nabla = 0.0;     // added to row norms before dividing
    double nu = 0.0;        // output scale
    double tau = 0.0;       // softmax temperature
    std::size_t window = 0;

    void validate() const;
};

struct ModelConfig {
    std::size_t seq_len = 0;    // n
    std::size_t embed_dim = 0;  // d, must be >= 2
    std::size_t num_heads = 1;  // H, must divide d
    double input_bound = 1.0;   // B, l2 bound on input rows
    AttentionVariant variant = AttentionVariant::DotProduct;
    std::vector<LayerWeights> layers;
    std::optional<ScsaParams> scsa;

    std::size_t head_dim() const { return embed_dim / num_heads; }
    std::size_t num_layers() const { return layers.size(); }
    void validate() const;
};

LayerWeights zero_layer(std::size_t embed_dim, std::size_t num_heads,
                        AttentionVariant variant = AttentionVariant::DotProduct);
/// Gaussian weights with standard deviation 1/sqrt(d) per entry; ties q/k
/// when building for the L2 variant.
LayerWeights gaussian_layer(std::size_t embed_dim, std::size_t num_heads,
                            linalg::RngStream& rng,
                            AttentionVariant variant = AttentionVariant::DotProduct);

/// softmax((x Wq)(x Wk)^T / sqrt(head_dim)) (x Wv)
Matrix attention_head_dot(const Matrix& x, const HeadWeights& head, std::size_t head_dim);

/// Attention weights from the L2 kernel exp(-|x_i Wq - x_j Wk|^2 / sqrt(head_dim)),
/// requires tied q/k projections.
Matrix attention_head_l2(const Matrix& x, const HeadWeights& head, std::size_t head_dim);

/// Scaled cosine similarity attention on one window: rows of Q, K, V are
/// l2-normalized with denominator (norm + nabla), output nu * softmax(tau Q K^T) V.
Matrix attention_head_scsa(const Matrix& x_window, const HeadWeights& head,
                           const ScsaParams& p, std::size_t head_dim);

/// SCSA applied independently to each contiguous window of `p.window` rows,
/// heads concatenated and projected by w_o.
Matrix scsa_layer(const Matrix& x, const LayerWeights& layer, const ScsaParams& p);

Matrix multi_head_attention(const Matrix& x, const LayerWeights& layer,
                            AttentionVariant variant, const ScsaParams* scsa = nullptr);

/// Row centering scaled by d/(d-1); a linear map with operator norm exactly
/// d/(d-1), unit affine parameters.
Matrix center_norm(const Matrix& x);

/// Elementwise ReLU of x * w_ffn.
Matrix ffn(const Matrix& x, const Matrix& w_ffn);

/// Post-LN block: x' = CN(x + MHA(x)); returns CN(x' + FFN(x')).
Matrix attention_block(const Matrix& x, const LayerWeights& layer,
                       AttentionVariant variant, const ScsaParams* scsa = nullptr);

/// All attention blocks in order (no pooling).
Matrix backbone(const Matrix& x, const ModelConfig& cfg);

/// Backbone followed by the pooling operator.
Vector forward(const Matrix& x, const ModelConfig& cfg, pooling::PoolKind kind,
               const pooling::PoolParams* params = nullptr);

/// Jacobian blocks of the un-projected dot-product attention map
/// h(X) = softmax(X A^T X^T) X with A = Wk Wq^T / sqrt(head_dim).
struct AttentionJacobian {
    std::size_t n = 0;
    std::size_t d = 0;
    std::vector<Matrix> blocks;  // row-major n x n grid of d x d blocks
    Matrix a_matrix;

    const Matrix& block(std::size_t i, std::size_t j) const { return blocks[i * n + j]; }
};

/// The attention map h itself, exposed for finite-difference checks.
Matrix attention_map(const Matrix& x, const HeadWeights& head, std::size_t head_dim);

AttentionJacobian analytic_attention_jacobian(const Matrix& x, const HeadWeights& head,
                                              std::size_t head_dim);

}  // namespace poolbound::model
