#include "poolbound/bounds.hpp"

#include <cmath>
#include <numbers>

namespace poolbound::bounds {

using linalg::spectral_norm;

double c2(const model::LayerWeights& layer) {
    return 1.0 + spectral_norm(layer.w_ffn);
}

double c1_dot(const model::LayerWeights& layer, std::size_t n, std::size_t d,
              std::size_t num_heads, double input_bound) {
    const double head_dim = static_cast<double>(d) / static_cast<double>(num_heads);
    const double b2 = input_bound * input_bound;
    double worst = 0.0;
    for (const model::HeadWeights& head : layer.heads) {
        const double slope =
            spectral_norm(head.w_v) *
            (4.0 * (static_cast<double>(n) / std::sqrt(head_dim)) * b2 *
                 spectral_norm(head.w_q) * spectral_norm(head.w_k) +
             1.0);
        worst = std::max(worst, slope);
    }
    return 1.0 + spectral_norm(layer.w_o) * std::sqrt(static_cast<double>(num_heads)) * worst;
}

double c1_l2(const model::LayerWeights& layer, std::size_t n, std::size_t d,
             std::size_t num_heads) {
    const double head_dim = static_cast<double>(d) / static_cast<double>(num_heads);
    double sum_sq = 0.0;
    for (const model::HeadWeights& head : layer.heads) {
        const double q = spectral_norm(head.w_q);
        const double v = spectral_norm(head.w_v);
        sum_sq += q * q * v * v;
    }
    const double lambert = linalg::lambert_w0(static_cast<double>(n) / std::numbers::e);
    return 1.0 + (std::sqrt(static_cast<double>(n)) / std::sqrt(head_dim)) *
                     (4.0 * lambert + 1.0) * std::sqrt(sum_sq) * spectral_norm(layer.w_o);
}

double c1_scsa(const model::LayerWeights& layer, const model::ScsaParams& p,
               std::size_t num_heads) {
    const double w = static_cast<double>(p.window);
    const double inv_sqrt_nabla = 1.0 / std::sqrt(p.nabla);
    double worst = 0.0;
    for (const model::HeadWeights& head : layer.heads) {
        const double term = 2.0 * w * (w - 1.0) * p.nu * p.tau * inv_sqrt_nabla *
                                spectral_norm(head.w_k) +
                            2.0 * (w - 1.0) * p.nu * p.tau * inv_sqrt_nabla *
                                spectral_norm(head.w_q) +
                            2.0 * w * p.nu * inv_sqrt_nabla * spectral_norm(head.w_v);
        worst = std::max(worst, term);
    }
    return 1.0 + spectral_norm(layer.w_o) * std::sqrt(static_cast<double>(num_heads)) * worst;
}

double c1_for(const model::LayerWeights& layer, const model::ModelConfig& cfg) {
    switch (cfg.variant) {
        case model::AttentionVariant::DotProduct:
            return c1_dot(layer, cfg.seq_len, cfg.embed_dim, cfg.num_heads, cfg.input_bound);
        case model::AttentionVariant::L2Tied:
            return c1_l2(layer, cfg.seq_len, cfg.embed_dim, cfg.num_heads);
        case model::AttentionVariant::Scsa:
            if (!cfg.scsa.has_value())
                throw ConfigError("c1: scsa variant requires scsa params");
            return c1_scsa(layer, *cfg.scsa, cfg.num_heads);
    }
    throw UnsupportedError("c1: unknown attention variant");
}

double layer_lipschitz(const model::LayerWeights& layer, const model::ModelConfig& cfg) {
    const double d = static_cast<double>(cfg.embed_dim);
    const double ln_factor = (d / (d - 1.0)) * (d / (d - 1.0));
    return ln_factor * c1_for(layer, cfg) * c2(layer);
}

BoundReport gamma_bound(const model::ModelConfig& cfg, pooling::PoolKind kind,
                        double eps, double sigma) {
    cfg.validate();
    if (!(eps > 0.0)) throw std::domain_error("gamma_bound: eps must be positive");
    if (!(sigma > 0.0)) throw std::domain_error("gamma_bound: sigma must be positive");
    if (pooling::is_learnable(kind))
        throw UnsupportedError("gamma_bound: no closed-form bound for learnable pooling");

    BoundReport report;
    report.variant = cfg.variant;
    report.kind = kind;
    report.eps = eps;
    report.sigma = sigma;
    const double d = static_cast<double>(cfg.embed_dim);
    report.ln_factor = (d / (d - 1.0)) * (d / (d - 1.0));
    report.pool_factor = pooling::pooling_factor(kind, cfg.seq_len, cfg.embed_dim);

    report.lipschitz_total = 1.0;
    for (const model::LayerWeights& layer : cfg.layers) {
        const double c1_l = c1_for(layer, cfg);
        const double c2_l = c2(layer);
        report.c1_per_layer.push_back(c1_l);
        report.c2_per_layer.push_back(c2_l);
        report.lipschitz_total *= report.ln_factor * c1_l * c2_l;
    }
    report.gamma = (eps / sigma) * report.pool_factor * report.lipschitz_total;
    report.vacuous = report.gamma > 1.0;
    return report;
}

}  // namespace poolbound::bounds
