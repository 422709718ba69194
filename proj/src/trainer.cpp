#include "poolbound/trainer.hpp"

#include <cmath>
#include <string>

namespace poolbound::trainer {

const char* task_name(TaskKind kind) {
    switch (kind) {
        case TaskKind::GlobalMean: return "global_mean";
        case TaskKind::LastToken: return "last_token";
        case TaskKind::Mixed: return "mixed";
    }
    return "?";
}

namespace {

double target_for(TaskKind kind, const Matrix& x, const Vector& probe) {
    const std::size_t n = x.rows();
    const std::size_t d = x.cols();
    double global = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
        double col = 0.0;
        for (std::size_t i = 0; i < n; ++i) col += x(i, j);
        global += probe[j] * (col / static_cast<double>(n));
    }
    double last = 0.0;
    for (std::size_t j = 0; j < d; ++j) last += probe[j] * x(n - 1, j);
    switch (kind) {
        case TaskKind::GlobalMean: return global;
        case TaskKind::LastToken: return last;
        case TaskKind::Mixed: return 0.5 * (global + last);
    }
    return 0.0;
}

}  // namespace

SyntheticTask gen_task(TaskKind kind, std::size_t seq_len, std::size_t embed_dim,
                       std::size_t samples, RngStream rng, double input_bound) {
    if (samples == 0) throw InvalidInputError("gen_task: samples must be >= 1");
    if (seq_len == 0 || embed_dim == 0) throw InvalidInputError("gen_task: empty shape");

    SyntheticTask task;
    task.kind = kind;
    task.seed = rng.seed();
    task.probe.resize(embed_dim);
    for (double& v : task.probe) v = rng.gaussian();

    const double hi = input_bound / std::sqrt(static_cast<double>(embed_dim));
    task.inputs.reserve(samples);
    task.targets.reserve(samples);
    for (std::size_t s = 0; s < samples; ++s) {
        Matrix x(seq_len, embed_dim);
        for (double& v : x.data()) v = rng.uniform(0.0, hi);
        task.targets.push_back(target_for(kind, x, task.probe));
        task.inputs.push_back(std::move(x));
    }
    return task;
}

namespace {

struct FlatParams {
    // Order: pooling parameters, then head weights, then bias.
    std::vector<double*> slots;
};

FlatParams flatten(pooling::PoolParams& params, Vector& head_w, double& head_b) {
    FlatParams flat;
    if (params.wavg_logits.has_value())
        for (double& v : *params.wavg_logits) flat.slots.push_back(&v);
    if (params.attn_query.has_value())
        for (double& v : *params.attn_query) flat.slots.push_back(&v);
    for (double& v : head_w) flat.slots.push_back(&v);
    flat.slots.push_back(&head_b);
    return flat;
}

double mse_loss(const std::vector<Matrix>& pooled_inputs, const std::vector<double>& targets,
                pooling::PoolKind kind, const pooling::PoolParams& params,
                const Vector& head_w, double head_b) {
    double loss = 0.0;
    for (std::size_t s = 0; s < pooled_inputs.size(); ++s) {
        const Vector pooled = pooling::pool(pooled_inputs[s], kind, &params);
        const double r = linalg::dot(head_w, pooled) + head_b - targets[s];
        loss += r * r;
    }
    return loss / static_cast<double>(pooled_inputs.size());
}

// Gaussian elimination with partial pivoting; m is consumed.
Vector solve_linear(Matrix m, Vector rhs) {
    const std::size_t n = m.rows();
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(m(r, col)) > std::abs(m(pivot, col))) pivot = r;
        if (pivot != col) {
            for (std::size_t c = 0; c < n; ++c) std::swap(m(col, c), m(pivot, c));
            std::swap(rhs[col], rhs[pivot]);
        }
        const double diag = m(col, col);
        for (std::size_t r = col + 1; r < n; ++r) {
            const double factor = m(r, col) / diag;
            if (factor == 0.0) continue;
            for (std::size_t c = col; c < n; ++c) m(r, c) -= factor * m(col, c);
            rhs[r] -= factor * rhs[col];
        }
    }
    Vector x(n, 0.0);
    for (std::size_t r = n; r-- > 0;) {
        double sum = rhs[r];
        for (std::size_t c = r + 1; c < n; ++c) sum -= m(r, c) * x[c];
        x[r] = sum / m(r, r);
    }
    return x;
}

// Exact ridge-regularized least-squares head for the starting pooling
// weights. Descent then only has to reshape the pooling side, which keeps the
// badly scaled logit block from crawling behind the quadratic head block.
void init_head_least_squares(const std::vector<Matrix>& features,
                             const std::vector<double>& targets, pooling::PoolKind kind,
                             const pooling::PoolParams& params, Vector& head_w,
                             double& head_b) {
    const std::size_t d = head_w.size();
    Matrix normal(d + 1, d + 1);
    Vector rhs(d + 1, 0.0);
    for (std::size_t s = 0; s < features.size(); ++s) {
        Vector a = pooling::pool(features[s], kind, &params);
        a.push_back(1.0);
        for (std::size_t i = 0; i <= d; ++i) {
            for (std::size_t j = 0; j <= d; ++j) normal(i, j) += a[i] * a[j];
            rhs[i] += a[i] * targets[s];
        }
    }
    for (std::size_t i = 0; i <= d; ++i) normal(i, i) += 1e-9;
    const Vector solution = solve_linear(std::move(normal), std::move(rhs));
    for (std::size_t j = 0; j < d; ++j) head_w[j] = solution[j];
    head_b = solution[d];
}

}  // namespace

TrainedHead train(const model::ModelConfig& cfg, pooling::PoolKind kind,
                  const SyntheticTask& task, const TrainConfig& tc) {
    if (!pooling::is_learnable(kind))
        throw UnsupportedError("train: pooling kind has no learnable parameters");
    if (!(tc.learning_rate > 0.0)) throw ConfigError("train: learning_rate must be positive");
    if (tc.epochs == 0) throw ConfigError("train: epochs must be >= 1");
    if (task.inputs.empty()) throw InvalidInputError("train: task has no samples");

    const std::size_t n = cfg.seq_len;
    const std::size_t d = cfg.embed_dim;
    const std::size_t samples = task.inputs.size();

    // Backbone is frozen: its outputs never change during descent.
    std::vector<Matrix> features;
    features.reserve(samples);
    for (const Matrix& x : task.inputs) features.push_back(model::backbone(x, cfg));

    // Both learnable pooling kinds are scale-equivariant in z, so dividing the
    // frozen features by their root-mean-square row norm is an exact
    // reparameterization. It makes the stable learning-rate range independent
    // of the backbone; the learned parameters are mapped back afterwards.
    double feature_ms = 0.0;
    for (const Matrix& z : features) {
        const double f = linalg::frobenius_norm(z);
        feature_ms += f * f / static_cast<double>(n);
    }
    double feature_scale = std::sqrt(feature_ms / static_cast<double>(samples));
    if (!(feature_scale > 1e-12)) feature_scale = 1.0;
    for (Matrix& z : features)
        for (double& v : z.data()) v /= feature_scale;

    // Descend on standardized targets so the pooling-logit block and the
    // quadratic head block see comparable gradient scales; the learned head
    // is mapped back to raw units at the end.
    double target_mean = 0.0;
    for (double y : task.targets) target_mean += y;
    target_mean /= static_cast<double>(samples);
    double target_var = 0.0;
    for (double y : task.targets) target_var += (y - target_mean) * (y - target_mean);
    double target_scale = std::sqrt(target_var / static_cast<double>(samples));
    if (!(target_scale > 1e-12)) target_scale = 1.0;
    std::vector<double> targets(samples);
    for (std::size_t s = 0; s < samples; ++s)
        targets[s] = (task.targets[s] - target_mean) / target_scale;

    TrainedHead result;
    if (kind == pooling::PoolKind::WeightedAvg)
        result.pool_params.wavg_logits = Vector(n, 0.0);  // start from uniform weights
    else
        result.pool_params.attn_query = Vector(d, 0.0);   // start equal to average pooling
    result.head_w.assign(d, 0.0);
    result.head_b = 0.0;
    init_head_least_squares(features, targets, kind, result.pool_params, result.head_w,
                            result.head_b);

    const double scale = 2.0 / static_cast<double>(samples);
    for (std::size_t epoch = 0; epoch < tc.epochs; ++epoch) {
        Vector grad_pool(kind == pooling::PoolKind::WeightedAvg ? n : d, 0.0);
        Vector grad_w(d, 0.0);
        double grad_b = 0.0;
        double loss = 0.0;
        for (std::size_t s = 0; s < samples; ++s) {
            const Vector pooled = pooling::pool(features[s], kind, &result.pool_params);
            const double r =
                linalg::dot(result.head_w, pooled) + result.head_b - targets[s];
            loss += r * r;
            for (std::size_t j = 0; j < d; ++j) grad_w[j] += scale * r * pooled[j];
            grad_b += scale * r;
            const pooling::PoolParamGrad g = pooling::pool_param_grad(
                features[s], kind, result.pool_params, result.head_w);
            const Vector& gp = kind == pooling::PoolKind::WeightedAvg ? *g.wavg_logits
                                                                      : *g.attn_query;
            for (std::size_t j = 0; j < grad_pool.size(); ++j)
                grad_pool[j] += scale * r * gp[j];
        }
        loss /= static_cast<double>(samples);
        if (!std::isfinite(loss))
            throw TrainingError("train: loss diverged at epoch " + std::to_string(epoch),
                                epoch);
        result.loss_curve.push_back(loss);

        if (tc.grad_check_every > 0 && epoch % tc.grad_check_every == 0) {
            Vector analytic;
            for (double g : grad_pool) analytic.push_back(g);
            for (double g : grad_w) analytic.push_back(g);
            analytic.push_back(grad_b);
            FlatParams flat = flatten(result.pool_params, result.head_w, result.head_b);
            const double fd_step = 1e-6;
            for (std::size_t k = 0; k < flat.slots.size(); ++k) {
                const double saved = *flat.slots[k];
                *flat.slots[k] = saved + fd_step;
                const double lp = mse_loss(features, targets, kind,
                                           result.pool_params, result.head_w, result.head_b);
                *flat.slots[k] = saved - fd_step;
                const double lm = mse_loss(features, targets, kind,
                                           result.pool_params, result.head_w, result.head_b);
                *flat.slots[k] = saved;
                const double fd = (lp - lm) / (2.0 * fd_step);
                const double err = std::abs(fd - analytic[k]) / std::max(1.0, std::abs(analytic[k]));
                result.fd_max_rel_error = std::max(result.fd_max_rel_error, err);
            }
        }

        Vector& pool_vec = kind == pooling::PoolKind::WeightedAvg
                               ? *result.pool_params.wavg_logits
                               : *result.pool_params.attn_query;
        for (std::size_t j = 0; j < pool_vec.size(); ++j)
            pool_vec[j] -= tc.learning_rate * grad_pool[j];
        for (std::size_t j = 0; j < d; ++j)
            result.head_w[j] -= tc.learning_rate * grad_w[j];
        result.head_b -= tc.learning_rate * grad_b;
    }

    const double final_loss = mse_loss(features, targets, kind, result.pool_params,
                                       result.head_w, result.head_b);
    if (!std::isfinite(final_loss))
        throw TrainingError("train: loss diverged at the final epoch", tc.epochs);
    result.loss_curve.push_back(final_loss);

    // back to raw target and feature units
    for (double& v : result.head_w) v *= target_scale / feature_scale;
    result.head_b = result.head_b * target_scale + target_mean;
    for (double& loss : result.loss_curve) loss *= target_scale * target_scale;
    if (result.pool_params.attn_query.has_value())
        for (double& v : *result.pool_params.attn_query) v /= feature_scale;
    return result;
}

WeightStats weight_stats(const pooling::PoolParams& params, pooling::PoolKind kind) {
    if (kind != pooling::PoolKind::WeightedAvg)
        throw UnsupportedError("weight_stats: defined for weighted-average pooling only");
    if (!params.wavg_logits.has_value())
        throw ConfigError("weight_stats: wavg_logits missing");
    const Vector w = linalg::softmax(*params.wavg_logits);

    WeightStats stats;
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (w[i] > 0.0) stats.entropy -= w[i] * std::log(w[i]);
        if (w[i] > w[stats.argmax_index]) stats.argmax_index = i;
    }
    stats.last_mass = w.back();
    return stats;
}

}  // namespace poolbound::trainer
