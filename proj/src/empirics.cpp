#include "poolbound/empirics.hpp"

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>

namespace poolbound::empirics {

namespace {

// Sub-stream tags so draws for different purposes never collide.
constexpr std::uint64_t kBaseInputTag = 1;
constexpr std::uint64_t kPerturbTag = 2;
constexpr std::uint64_t kWeightsTag = 3;

void run_trials(std::size_t trials, ExecPolicy policy,
                const std::function<void(std::size_t)>& body) {
    const auto count = static_cast<std::int64_t>(trials);
    if (policy == ExecPolicy::Parallel) {
#pragma omp parallel for schedule(static)
        for (std::int64_t t = 0; t < count; ++t) body(static_cast<std::size_t>(t));
    } else {
        for (std::int64_t t = 0; t < count; ++t) body(static_cast<std::size_t>(t));
    }
}

}  // namespace

Matrix sample_input(std::size_t seq_len, std::size_t embed_dim, double input_bound,
                    RngStream& rng) {
    const double hi = input_bound / std::sqrt(static_cast<double>(embed_dim));
    Matrix x(seq_len, embed_dim);
    for (double& v : x.data()) v = rng.uniform(0.0, hi);
    return x;
}

Matrix perturb(const Matrix& x, double eps, RngStream& rng) {
    linalg::validate(x, "perturb");
    if (eps < 0.0) throw std::domain_error("perturb: eps must be non-negative");
    Matrix direction = linalg::gaussian_matrix(x.rows(), x.cols(), rng);
    const double norm = linalg::frobenius_norm(direction);
    Matrix out = x;
    for (std::size_t i = 0; i < out.data().size(); ++i)
        out.data()[i] += eps * direction.data()[i] / norm;
    return out;
}

RngStream trial_input_stream(const RngStream& master, std::size_t trial) {
    return master.child(kBaseInputTag).child(trial);
}

RngStream trial_direction_stream(const RngStream& master, std::size_t trial) {
    return master.child(kPerturbTag).child(trial);
}

RngStream trial_weight_stream(const RngStream& master, std::size_t trial) {
    return master.child(kWeightsTag).child(trial);
}

TrialDistances pooled_distance_trials(const model::ModelConfig& cfg,
                                      const std::vector<PoolTarget>& targets, double eps,
                                      std::size_t trials, const RngStream& master,
                                      ExecPolicy policy) {
    cfg.validate();
    if (targets.empty()) throw InvalidInputError("pooled_distance_trials: no targets");
    if (trials == 0) throw InvalidInputError("pooled_distance_trials: trials must be >= 1");
    // Parameter problems must surface here, not inside the parallel region.
    for (const PoolTarget& target : targets) {
        if (!pooling::is_learnable(target.kind)) continue;
        if (target.kind == pooling::PoolKind::WeightedAvg &&
            (!target.params.wavg_logits.has_value() ||
             target.params.wavg_logits->size() != cfg.seq_len))
            throw ConfigError("pooled_distance_trials: wavg_logits of length n required");
        if (target.kind == pooling::PoolKind::Attention &&
            (!target.params.attn_query.has_value() ||
             target.params.attn_query->size() != cfg.embed_dim))
            throw ConfigError("pooled_distance_trials: attn_query of length d required");
    }

    TrialDistances out;
    out.input_dist.assign(trials, 0.0);
    out.output_dist.assign(targets.size(), std::vector<double>(trials, 0.0));

    run_trials(trials, policy, [&](std::size_t t) {
        RngStream base_rng = trial_input_stream(master, t);
        RngStream dir_rng = trial_direction_stream(master, t);
        const Matrix x = sample_input(cfg.seq_len, cfg.embed_dim, cfg.input_bound, base_rng);
        const Matrix xt = perturb(x, eps, dir_rng);
        out.input_dist[t] = linalg::frobenius_norm(xt - x);

        const Matrix z = model::backbone(x, cfg);
        const Matrix zt = model::backbone(xt, cfg);
        for (std::size_t k = 0; k < targets.size(); ++k) {
            const pooling::PoolParams* params =
                pooling::is_learnable(targets[k].kind) ? &targets[k].params : nullptr;
            const Vector y = pooling::pool(z, targets[k].kind, params);
            const Vector yt = pooling::pool(zt, targets[k].kind, params);
            double dist2 = 0.0;
            for (std::size_t j = 0; j < y.size(); ++j) {
                const double diff = yt[j] - y[j];
                dist2 += diff * diff;
            }
            out.output_dist[k][t] = std::sqrt(dist2);
        }
    });
    return out;
}

namespace {

PerturbationRow summarize_row(double eps, const std::vector<double>& input_dist,
                              const std::vector<double>& output_dist,
                              const std::vector<double>& sigma_grid) {
    PerturbationRow row;
    row.eps = eps;
    double sum = 0.0;
    for (double d : output_dist) sum += d;  // index order, policy-independent
    row.mean_distance = sum / static_cast<double>(output_dist.size());
    row.exceedance.assign(sigma_grid.size(), 0.0);
    for (std::size_t s = 0; s < sigma_grid.size(); ++s) {
        std::size_t count = 0;
        for (double d : output_dist)
            if (d > sigma_grid[s]) ++count;
        row.exceedance[s] =
            static_cast<double>(count) / static_cast<double>(output_dist.size());
    }
    row.max_slope = 0.0;
    if (eps >= 1e-9) {
        for (std::size_t t = 0; t < output_dist.size(); ++t)
            row.max_slope = std::max(row.max_slope, output_dist[t] / input_dist[t]);
    }
    return row;
}

}  // namespace

PerturbationRow summarize_trials(double eps, const TrialDistances& dist,
                                 std::size_t target_index,
                                 const std::vector<double>& sigma_grid) {
    return summarize_row(eps, dist.input_dist, dist.output_dist.at(target_index), sigma_grid);
}

PerturbationReport empirical_expressivity(const model::ModelConfig& cfg,
                                          pooling::PoolKind kind,
                                          const pooling::PoolParams* params, double eps,
                                          const std::vector<double>& sigma_grid,
                                          std::size_t trials, const RngStream& master,
                                          ExecPolicy policy) {
    std::vector<PoolTarget> targets{{kind, params ? *params : pooling::PoolParams{}}};
    const TrialDistances dist = pooled_distance_trials(cfg, targets, eps, trials, master, policy);

    PerturbationReport report;
    report.sigma_grid = sigma_grid;
    report.trials = trials;
    report.seed = master.seed();
    report.rows.push_back(summarize_row(eps, dist.input_dist, dist.output_dist[0], sigma_grid));
    return report;
}

double empirical_lipschitz(const model::ModelConfig& cfg, pooling::PoolKind kind,
                           const pooling::PoolParams* params, std::size_t trials,
                           double eps, const RngStream& master, ExecPolicy policy) {
    if (eps < 1e-9)
        throw std::domain_error("empirical_lipschitz: eps below 1e-9, slope undefined");
    const PerturbationReport report =
        empirical_expressivity(cfg, kind, params, eps, {}, trials, master, policy);
    return report.rows[0].max_slope;
}

JacobianCheckReport jacobian_check(const model::ModelConfig& cfg, std::size_t trials,
                                   double fd_step, const RngStream& master,
                                   ExecPolicy policy) {
    cfg.validate();
    if (cfg.variant != model::AttentionVariant::DotProduct)
        throw UnsupportedError("jacobian_check: only the dot-product variant is analyzed");
    if (cfg.num_layers() != 1)
        throw UnsupportedError("jacobian_check: requires a single-layer config");
    if (trials == 0) throw InvalidInputError("jacobian_check: trials must be >= 1");
    if (!(fd_step > 0.0)) throw std::domain_error("jacobian_check: fd_step must be positive");

    const std::size_t n = cfg.seq_len;
    const std::size_t d = cfg.embed_dim;
    const std::size_t head_dim = cfg.head_dim();
    const double b2 = cfg.input_bound * cfg.input_bound;

    struct TrialResult {
        double max_rel_error = 0.0;
        std::pair<std::size_t, std::size_t> worst_block{0, 0};
        Matrix margins;
    };
    std::vector<TrialResult> results(trials);

    run_trials(trials, policy, [&](std::size_t t) {
        RngStream weight_rng = trial_weight_stream(master, t);
        RngStream input_rng = trial_input_stream(master, t);
        const model::LayerWeights layer =
            model::gaussian_layer(d, cfg.num_heads, weight_rng, cfg.variant);
        const Matrix x = sample_input(n, d, cfg.input_bound, input_rng);

        TrialResult res;
        res.margins = Matrix(n, n, std::numeric_limits<double>::infinity());
        for (const model::HeadWeights& head : layer.heads) {
            const model::AttentionJacobian jac =
                model::analytic_attention_jacobian(x, head, head_dim);
            const double a_norm = linalg::spectral_norm(jac.a_matrix);

            // Central differences of h(X) = P X, one input entry at a time.
            std::vector<Matrix> fd_blocks(n * n, Matrix(d, d));
            for (std::size_t j = 0; j < n; ++j) {
                for (std::size_t c = 0; c < d; ++c) {
                    Matrix xp = x;
                    Matrix xm = x;
                    xp(j, c) += fd_step;
                    xm(j, c) -= fd_step;
                    const Matrix hp = model::attention_map(xp, head, head_dim);
                    const Matrix hm = model::attention_map(xm, head, head_dim);
                    for (std::size_t i = 0; i < n; ++i)
                        for (std::size_t r = 0; r < d; ++r)
                            fd_blocks[i * n + j](r, c) =
                                (hp(i, r) - hm(i, r)) / (2.0 * fd_step);
                }
            }

            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t j = 0; j < n; ++j) {
                    const Matrix& analytic = jac.block(i, j);
                    const double err =
                        linalg::frobenius_norm(analytic - fd_blocks[i * n + j]) /
                        std::max(1.0, linalg::frobenius_norm(analytic));
                    if (err > res.max_rel_error) {
                        res.max_rel_error = err;
                        res.worst_block = {i, j};
                    }
                    const double bound =
                        (i == j ? 4.0 : 2.0) * static_cast<double>(n) * b2 * a_norm + 1.0;
                    const double margin = bound - linalg::spectral_norm(analytic);
                    res.margins(i, j) = std::min(res.margins(i, j), margin);
                }
            }
        }
        results[t] = std::move(res);
    });

    JacobianCheckReport report;
    report.fd_step = fd_step;
    report.case_bound_margins = Matrix(n, n, std::numeric_limits<double>::infinity());
    report.min_margin = std::numeric_limits<double>::infinity();
    for (const TrialResult& res : results) {
        if (res.max_rel_error > report.max_relative_error) {
            report.max_relative_error = res.max_rel_error;
            report.worst_block = res.worst_block;
        }
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                report.case_bound_margins(i, j) =
                    std::min(report.case_bound_margins(i, j), res.margins(i, j));
                report.min_margin = std::min(report.min_margin, res.margins(i, j));
            }
        }
    }
    return report;
}

std::vector<SweepEntry> sweep(const model::ModelConfig& cfg,
                              const std::vector<pooling::PoolKind>& kinds,
                              const std::vector<double>& eps_grid, double sigma,
                              std::size_t trials, const RngStream& master,
                              ExecPolicy policy) {
    for (std::size_t i = 1; i < eps_grid.size(); ++i)
        if (!(eps_grid[i] > eps_grid[i - 1]))
            throw InvalidInputError("sweep: eps_grid must be strictly increasing");
    if (kinds.empty()) throw InvalidInputError("sweep: no pooling kinds");
    for (pooling::PoolKind kind : kinds)
        if (pooling::is_learnable(kind))
            throw UnsupportedError("sweep: learnable pooling has no bound to pair with");

    std::vector<PoolTarget> targets;
    for (pooling::PoolKind kind : kinds) targets.push_back({kind, {}});

    std::vector<SweepEntry> entries;
    for (double eps : eps_grid) {
        // The same master stream at every eps: common random numbers across the curve.
        const TrialDistances dist =
            pooled_distance_trials(cfg, targets, eps, trials, master, policy);
        for (std::size_t k = 0; k < kinds.size(); ++k) {
            bounds::BoundReport bound =
                bounds::gamma_bound(cfg, kinds[k], eps > 0.0 ? eps : 1.0, sigma);
            if (eps == 0.0) {  // the bound is linear in eps; no perturbation, no bound mass
                bound.eps = 0.0;
                bound.gamma = 0.0;
                bound.vacuous = false;
            }
            SweepEntry entry{kinds[k],
                             summarize_row(eps, dist.input_dist, dist.output_dist[k], {sigma}),
                             std::move(bound)};
            entries.push_back(std::move(entry));
        }
    }
    return entries;
}

}  // namespace poolbound::empirics
