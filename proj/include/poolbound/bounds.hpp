#pragma once

#include <cstddef>
#include <vector>

#include "poolbound/model.hpp"
#include "poolbound/pooling.hpp"

namespace poolbound::bounds {

/// Closed-form expressivity bound for one (model, pooling, eps, sigma) tuple.
/// gamma = (eps/sigma) * pool_factor * prod_l [ln_factor * c1_l * c2_l].
struct BoundReport {
    model::AttentionVariant variant;
    pooling::PoolKind kind;
    double eps = 0.0;
    double sigma = 0.0;
    std::vector<double> c1_per_layer;
    std::vector<double> c2_per_layer;
    double ln_factor = 0.0;        // (d/(d-1))^2
    double pool_factor = 0.0;
    double lipschitz_total = 0.0;  // product of per-layer factors
    double gamma = 0.0;
    bool vacuous = false;          // gamma > 1: the probability bound says nothing
};

/// 1 + |W_ffn|.
double c2(const model::LayerWeights& layer);

/// Dot-product attention:
/// 1 + |W_o| sqrt(H) max_h [ |W_v^h| (4 (n / sqrt(d/H)) B^2 |W_q^h| |W_k^h| + 1) ].
double c1_dot(const model::LayerWeights& layer, std::size_t n, std::size_t d,
              std::size_t num_heads, double input_bound);

/// L2 kernel attention with tied q/k:
/// 1 + (sqrt(n)/sqrt(d/H)) (4 W0(n/e) + 1) sqrt(sum_h |W_q^h|^2 |W_v^h|^2) |W_o|.
double c1_l2(const model::LayerWeights& layer, std::size_t n, std::size_t d,
             std::size_t num_heads);

/// Scaled cosine similarity attention with window size w:
/// 1 + |W_o| sqrt(H) max_h { 2w(w-1) nu tau nabla^{-1/2} |W_k^h|
///   + 2(w-1) nu tau nabla^{-1/2} |W_q^h| + 2w nu nabla^{-1/2} |W_v^h| }.
double c1_scsa(const model::LayerWeights& layer, const model::ScsaParams& p,
               std::size_t num_heads);

/// C1 for the config's attention variant.
double c1_for(const model::LayerWeights& layer, const model::ModelConfig& cfg);

/// (d/(d-1))^2 * C1 * C2 for one layer.
double layer_lipschitz(const model::LayerWeights& layer, const model::ModelConfig& cfg);

BoundReport gamma_bound(const model::ModelConfig& cfg, pooling::PoolKind kind,
                        double eps, double sigma);

}  // namespace poolbound::bounds
