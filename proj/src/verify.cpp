#include "poolbound/verify.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

#include "poolbound/bounds.hpp"
#include "poolbound/commands.hpp"
#include "poolbound/trainer.hpp"

namespace poolbound::cli {

namespace {

using linalg::Matrix;
using linalg::RngStream;
using linalg::Vector;
using model::AttentionVariant;
using pooling::PoolKind;

constexpr std::uint64_t kVerifySeed = 0xACCE57ULL;

struct Checker {
    bool ok = true;
    std::ostringstream detail;

    void require(bool cond, const std::string& what) {
        if (!cond) {
            ok = false;
            if (detail.tellp() > 0) detail << "; ";
            detail << what;
        }
    }
};

model::ModelConfig make_config(AttentionVariant variant, std::size_t layers,
                               std::uint64_t weight_seed, std::size_t n = 8,
                               std::size_t d = 8, std::size_t heads = 2) {
    model::ModelConfig cfg;
    cfg.seq_len = n;
    cfg.embed_dim = d;
    cfg.num_heads = heads;
    cfg.input_bound = 1.0;
    cfg.variant = variant;
    if (variant == AttentionVariant::Scsa) cfg.scsa = model::ScsaParams{0.5, 1.0, 5.0, 4};
    RngStream rng(weight_seed, 0);
    for (std::size_t l = 0; l < layers; ++l) {
        RngStream layer_rng = rng.child(l);
        cfg.layers.push_back(model::gaussian_layer(d, heads, layer_rng, variant));
    }
    cfg.validate();
    return cfg;
}

// 1. Pooling factor exactness and the max-pooling contraction chain.
CriterionResult criterion_pooling_factors() {
    Checker chk;
    for (std::size_t n : {1, 2, 4, 16, 64}) {
        for (PoolKind kind : {PoolKind::Avg, PoolKind::Sum, PoolKind::Last}) {
            const double matrix_norm = pooling::pooling_matrix_norm_check(kind, n);
            const double factor = pooling::pooling_factor(kind, n, 4);
            chk.require(std::abs(matrix_norm - factor) <= 1e-12,
                        std::string(pooling::pool_name(kind)) + " factor mismatch at n=" +
                            std::to_string(n));
        }
    }
    const std::size_t n = 8, d = 5;
    RngStream master(kVerifySeed, 100);
    for (std::size_t t = 0; t < 1000; ++t) {
        RngStream rng = master.child(t);
        const Matrix z = linalg::gaussian_matrix(n, d, rng);
        const Matrix zt = linalg::gaussian_matrix(n, d, rng);
        const Vector p = pooling::pool(z, PoolKind::Max);
        const Vector pt = pooling::pool(zt, PoolKind::Max);
        Vector diff(d);
        for (std::size_t j = 0; j < d; ++j) diff[j] = p[j] - pt[j];
        const double lhs = linalg::norm2(diff);
        const double rhs = std::sqrt(static_cast<double>(std::min(n, d))) *
                           linalg::spectral_norm(z - zt);
        chk.require(lhs <= rhs * (1.0 + 1e-12), "max-pooling contraction violated");
    }
    return {1, "pooling factor exactness + max contraction", chk.ok, 0.0, chk.detail.str()};
}

// 2. Softmax Jacobian operator norm <= 2 over random simplex vectors.
CriterionResult criterion_softmax_jacobian_bound() {
    Checker chk;
    RngStream master(kVerifySeed, 200);
    for (std::size_t t = 0; t < 1000; ++t) {
        RngStream rng = master.child(t);
        const std::size_t dim = 2 + rng.next_u64() % 63;  // 2..64
        Vector p(dim);
        double sum = 0.0;
        for (double& v : p) {
            v = -std::log(1.0 - rng.uniform01());  // Exp(1) -> Dirichlet(1,..,1)
            sum += v;
        }
        for (double& v : p) v /= sum;
        const double norm = linalg::spectral_norm(linalg::softmax_jacobian(p));
        chk.require(norm <= 2.0 + 1e-9, "softmax Jacobian norm above 2");
    }
    return {2, "softmax Jacobian bound", chk.ok, 0.0, chk.detail.str()};
}

// 3. Analytic Jacobian vs central differences, with case-bound margins.
CriterionResult criterion_jacobian_fd() {
    Checker chk;
    struct Dims { std::size_t n, d, heads, trials; };
    const Dims grid[] = {{2, 4, 1, 4}, {4, 8, 2, 4}, {6, 8, 1, 4}, {3, 6, 2, 4}, {5, 8, 2, 4}};
    double worst_err = 0.0;
    double worst_margin = std::numeric_limits<double>::infinity();
    for (const Dims& dims : grid) {
        const model::ModelConfig cfg =
            make_config(AttentionVariant::DotProduct, 1, 7, dims.n, dims.d, dims.heads);
        const auto report = empirics::jacobian_check(cfg, dims.trials, 1e-5,
                                                     RngStream(kVerifySeed, 300 + dims.n));
        worst_err = std::max(worst_err, report.max_relative_error);
        worst_margin = std::min(worst_margin, report.min_margin);
    }
    chk.require(worst_err <= 1e-4, "FD disagreement above 1e-4");
    chk.require(worst_margin >= 0.0, "negative case-bound margin");
    std::ostringstream detail;
    detail << "max rel err " << worst_err << ", min margin " << worst_margin;
    return {3, "analytic vs FD attention Jacobian", chk.ok, 0.0,
            chk.ok ? detail.str() : chk.detail.str()};
}

struct SoundnessData {
    // Per (config, eps): trial distances for the four fixed pooling kinds.
    struct Cell {
        std::size_t seq_len;
        double eps;
        empirics::TrialDistances dist;
        std::vector<double> bound;  // per kind, already C1-scaled
    };
    std::vector<Cell> cells;
    std::vector<double> sigma_grid{0.05, 0.1, 0.5};
};

const std::vector<PoolKind> kFixedKinds{PoolKind::Avg, PoolKind::Sum, PoolKind::Max,
                                        PoolKind::Last};

SoundnessData run_soundness_trials(double inject_c1_scale, empirics::ExecPolicy policy,
                                   std::size_t trials) {
    SoundnessData data;
    std::size_t cfg_index = 0;
    for (AttentionVariant variant :
         {AttentionVariant::DotProduct, AttentionVariant::L2Tied, AttentionVariant::Scsa}) {
        for (std::size_t layers : {1, 2}) {
            for (std::uint64_t weight_seed : {101ULL, 202ULL}) {
                const model::ModelConfig cfg = make_config(variant, layers, weight_seed);
                std::vector<empirics::PoolTarget> targets;
                for (PoolKind kind : kFixedKinds) targets.push_back({kind, {}});
                for (double eps : {1e-3, 1e-2, 1e-1}) {
                    SoundnessData::Cell cell;
                    cell.seq_len = cfg.seq_len;
                    cell.eps = eps;
                    cell.dist = empirics::pooled_distance_trials(
                        cfg, targets, eps, trials,
                        RngStream(kVerifySeed, 400 + cfg_index), policy);
                    for (PoolKind kind : kFixedKinds) {
                        double lipschitz = 1.0;
                        const double dd = static_cast<double>(cfg.embed_dim);
                        const double ln_factor = (dd / (dd - 1.0)) * (dd / (dd - 1.0));
                        for (const model::LayerWeights& layer : cfg.layers)
                            lipschitz *= ln_factor * bounds::c1_for(layer, cfg) *
                                         inject_c1_scale * bounds::c2(layer);
                        cell.bound.push_back(
                            pooling::pooling_factor(kind, cfg.seq_len, cfg.embed_dim) *
                            lipschitz);
                    }
                    data.cells.push_back(std::move(cell));
                }
                ++cfg_index;
            }
        }
    }
    return data;
}

// 4. Empirical slopes below the closed-form bound, strictly, everywhere.
CriterionResult criterion_bound_soundness(const SoundnessData& data) {
    Checker chk;
    std::size_t violations = 0;
    double worst_ratio = 0.0;
    for (const auto& cell : data.cells) {
        for (std::size_t k = 0; k < kFixedKinds.size(); ++k) {
            const auto row =
                empirics::summarize_trials(cell.eps, cell.dist, k, data.sigma_grid);
            worst_ratio = std::max(worst_ratio, row.max_slope / cell.bound[k]);
            if (!(row.max_slope < cell.bound[k])) ++violations;
        }
    }
    chk.require(violations == 0,
                std::to_string(violations) + " slope(s) at or above the theoretical bound");
    std::ostringstream detail;
    detail << "worst slope/bound ratio " << worst_ratio;
    return {4, "bound soundness, all variants", chk.ok, 0.0,
            chk.ok ? detail.str() : chk.detail.str()};
}

// 5. Sum-pooled distances equal n x Avg-pooled distances, trial by trial.
CriterionResult criterion_sum_avg_tie(const SoundnessData& data) {
    Checker chk;
    for (const auto& cell : data.cells) {
        const auto& avg = cell.dist.output_dist[0];
        const auto& sum = cell.dist.output_dist[1];
        const double n = static_cast<double>(cell.seq_len);
        for (std::size_t t = 0; t < avg.size(); ++t) {
            const double expected = n * avg[t];
            chk.require(std::abs(sum[t] - expected) <= 1e-12 * std::max(1.0, expected),
                        "sum != n * avg at a trial");
            if (!chk.ok) break;
        }
        if (!chk.ok) break;
    }
    return {5, "exact Sum = n x Avg pooling tie", chk.ok, 0.0, chk.detail.str()};
}

// 6. Exceedance fractions obey the Markov inequality of the empirical measure.
CriterionResult criterion_markov(const SoundnessData& data) {
    Checker chk;
    for (const auto& cell : data.cells) {
        for (std::size_t k = 0; k < kFixedKinds.size(); ++k) {
            const auto row =
                empirics::summarize_trials(cell.eps, cell.dist, k, data.sigma_grid);
            for (std::size_t s = 0; s < data.sigma_grid.size(); ++s)
                chk.require(row.exceedance[s] <= row.mean_distance / data.sigma_grid[s],
                            "exceedance above mean/sigma");
        }
    }
    return {6, "empirical Markov consistency", chk.ok, 0.0, chk.detail.str()};
}

// 7. Multi-layer gamma is the product of per-layer factors.
CriterionResult criterion_multi_layer() {
    Checker chk;
    const model::ModelConfig cfg = make_config(AttentionVariant::DotProduct, 3, 11);
    const double eps = 0.05, sigma = 0.2;
    const auto report = bounds::gamma_bound(cfg, PoolKind::Avg, eps, sigma);
    double manual = (eps / sigma) * pooling::pooling_factor(PoolKind::Avg, cfg.seq_len,
                                                            cfg.embed_dim);
    for (const model::LayerWeights& layer : cfg.layers)
        manual *= bounds::layer_lipschitz(layer, cfg);
    chk.require(std::abs(report.gamma - manual) <= 1e-12 * std::abs(manual),
                "gamma differs from the per-layer product");
    return {7, "multi-layer composition", chk.ok, 0.0, chk.detail.str()};
}

// 8. Lambert W residuals on a log grid plus the n/e arguments the L2 bound uses.
CriterionResult criterion_lambert() {
    Checker chk;
    for (int i = 0; i < 30; ++i) {
        const double x = std::pow(10.0, -6.0 + 12.0 * i / 29.0);
        const double w = linalg::lambert_w0(x);
        chk.require(std::abs(w * std::exp(w) - x) <= 1e-10 * std::max(1.0, x),
                    "residual too large at grid point");
    }
    for (double n : {2.0, 64.0, 1024.0}) {
        const double x = n / std::numbers::e;
        const double w = linalg::lambert_w0(x);
        chk.require(std::abs(w * std::exp(w) - x) <= 1e-10 * std::max(1.0, x),
                    "residual too large at n/e");
    }
    return {8, "Lambert W residual identity", chk.ok, 0.0, chk.detail.str()};
}

// 9. Learned weighted-average weights recover the task signature.
CriterionResult criterion_weight_geometry() {
    Checker chk;
    const std::size_t n = 16, d = 8, samples = 512;
    const model::ModelConfig cfg = make_config(AttentionVariant::DotProduct, 1, 0, n, d, 1);
    // zero-weight backbone: double center-norm
    model::ModelConfig zero_cfg = cfg;
    zero_cfg.layers.assign(1, model::zero_layer(d, 1));

    trainer::TrainConfig tc;
    tc.learning_rate = 0.9;  // calibrated once, then frozen
    tc.epochs = 2000;
    tc.seed = 5;

    const auto last_task = trainer::gen_task(trainer::TaskKind::LastToken, n, d, samples,
                                             RngStream(kVerifySeed, 900));
    const auto last_head =
        trainer::train(zero_cfg, PoolKind::WeightedAvg, last_task, tc);
    const auto last_stats = trainer::weight_stats(last_head.pool_params, PoolKind::WeightedAvg);
    chk.require(last_stats.last_mass > 0.9, "last-token mass " +
                                                std::to_string(last_stats.last_mass) +
                                                " not above 0.9");

    const auto mean_task = trainer::gen_task(trainer::TaskKind::GlobalMean, n, d, samples,
                                             RngStream(kVerifySeed, 901));
    const auto mean_head =
        trainer::train(zero_cfg, PoolKind::WeightedAvg, mean_task, tc);
    const auto mean_stats = trainer::weight_stats(mean_head.pool_params, PoolKind::WeightedAvg);
    chk.require(mean_stats.entropy >= 0.9 * std::log(static_cast<double>(n)),
                "global-mean entropy " + std::to_string(mean_stats.entropy) +
                    " below 0.9 ln n");
    std::ostringstream detail;
    detail << "last_mass " << last_stats.last_mass << ", entropy " << mean_stats.entropy
           << " (ln n = " << std::log(static_cast<double>(n)) << ")";
    return {9, "learned pooling weight geometry", chk.ok, 0.0,
            chk.ok ? detail.str() : chk.detail.str()};
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

// 10. Sweep CSV byte-identical across reruns and across execution policies.
CriterionResult criterion_determinism() {
    Checker chk;
    RunConfig rc;
    rc.n = 4;
    rc.d = 4;
    rc.heads = 1;
    rc.layers = 1;
    rc.weight_seed = 3;
    rc.trials = 200;
    rc.eps_grid = {0.01, 0.1};
    rc.sigma_grid = {0.1};
    rc.master_seed = 77;

    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "poolbound_verify";
    fs::create_directories(dir);
    const fs::path a = dir / "sweep_a.csv";
    const fs::path b = dir / "sweep_b.csv";
    const fs::path c = dir / "sweep_serial.csv";
    write_sweep_csv(rc, a.string(), empirics::ExecPolicy::Parallel);
    write_sweep_csv(rc, b.string(), empirics::ExecPolicy::Parallel);
    write_sweep_csv(rc, c.string(), empirics::ExecPolicy::Serial);
    const std::string ra = read_file(a), rb = read_file(b), rs = read_file(c);
    chk.require(!ra.empty(), "sweep CSV is empty");
    chk.require(ra == rb, "two parallel runs differ");
    chk.require(ra == rs, "parallel and serial runs differ");
    fs::remove(a);
    fs::remove(b);
    fs::remove(c);
    return {10, "byte-identical sweep CSV", chk.ok, 0.0, chk.detail.str()};
}

// Negative control: injecting a 100x smaller C1 must break soundness.
CriterionResult criterion_negative_control(empirics::ExecPolicy policy) {
    Checker chk;
    const SoundnessData injected = run_soundness_trials(0.01, policy, 100);
    std::size_t violations = 0;
    for (const auto& cell : injected.cells)
        for (std::size_t k = 0; k < kFixedKinds.size(); ++k) {
            const auto row = empirics::summarize_trials(cell.eps, cell.dist, k, {});
            if (!(row.max_slope < cell.bound[k])) ++violations;
        }
    chk.require(violations > 0, "injected C1 violation went undetected");
    return {11, "negative control (injected C1 scale 0.01)", chk.ok, 0.0, chk.detail.str()};
}

CriterionResult timed(CriterionResult (*fn)(), double budget_seconds) {
    const auto start = std::chrono::steady_clock::now();
    CriterionResult res = fn();
    res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (budget_seconds > 0.0 && res.seconds > budget_seconds) {
        res.passed = false;
        res.detail += (res.detail.empty() ? "" : "; ");
        res.detail += "runtime above budget of " + std::to_string(budget_seconds) + " s";
    }
    return res;
}

}  // namespace

std::vector<CriterionResult> run_verification(const VerifyOptions& opts) {
    std::vector<CriterionResult> results;
    results.push_back(timed(&criterion_pooling_factors, 1.0));
    results.push_back(timed(&criterion_softmax_jacobian_bound, 2.0));
    results.push_back(timed(&criterion_jacobian_fd, 30.0));

    {
        const auto start = std::chrono::steady_clock::now();
        const SoundnessData data = run_soundness_trials(opts.inject_c1_scale, opts.policy, 1000);
        CriterionResult c4 = criterion_bound_soundness(data);
        c4.seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (c4.seconds > 180.0) {
            c4.passed = false;
            c4.detail += "; runtime above budget of 180 s";
        }
        results.push_back(c4);
        results.push_back(criterion_sum_avg_tie(data));
        results.push_back(criterion_markov(data));
    }

    results.push_back(timed(&criterion_multi_layer, 0.0));
    results.push_back(timed(&criterion_lambert, 0.0));
    results.push_back(timed(&criterion_weight_geometry, 60.0));
    results.push_back(timed(&criterion_determinism, 0.0));

    {
        const auto start = std::chrono::steady_clock::now();
        CriterionResult nc = criterion_negative_control(opts.policy);
        nc.seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        results.push_back(nc);
    }
    return results;
}

bool all_passed(const std::vector<CriterionResult>& results) {
    for (const CriterionResult& r : results)
        if (!r.passed) return false;
    return true;
}

void print_results(const std::vector<CriterionResult>& results) {
    for (const CriterionResult& r : results) {
        std::printf("[%s] %2d. %-42s (%.2f s)%s%s\n", r.passed ? "PASS" : "FAIL", r.id,
                    r.name.c_str(), r.seconds, r.detail.empty() ? "" : " -- ",
                    r.detail.c_str());
    }
}

}  // namespace poolbound::cli
