#pragma once

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "poolbound/bounds.hpp"
#include "poolbound/model.hpp"
#include "poolbound/pooling.hpp"

namespace poolbound::empirics {

using linalg::Matrix;
using linalg::RngStream;
using linalg::Vector;

/// Trial loops run either as a plain serial loop (reference) or OpenMP-parallel.
/// Both fill one pre-allocated slot per trial from a per-trial derived stream
/// and aggregate serially in index order, so results are bit-identical.
enum class ExecPolicy { Serial, Parallel };

/// Base inputs for all experiments: entries uniform on [0, B/sqrt(d)], which
/// keeps every row inside the l2 ball of radius B the bound formulas assume.
Matrix sample_input(std::size_t seq_len, std::size_t embed_dim, double input_bound,
                    RngStream& rng);

/// x + eps * G/|G|_F for a seeded Gaussian G, so the perturbed input sits at
/// Frobenius distance exactly eps.
Matrix perturb(const Matrix& x, double eps, RngStream& rng);

/// Streams feeding trial t of a run driven by `master`. Exposed so the exact
/// (x, x~) pair of any trial can be regenerated outside the harness.
RngStream trial_input_stream(const RngStream& master, std::size_t trial);
RngStream trial_direction_stream(const RngStream& master, std::size_t trial);
RngStream trial_weight_stream(const RngStream& master, std::size_t trial);

/// One pooling operator to evaluate on shared backbone outputs.
struct PoolTarget {
    pooling::PoolKind kind;
    pooling::PoolParams params;
};

/// Per-trial pooled-output distances for each target, plus the realized input
/// distances (shared across targets; every target sees the same (x, x~) pair).
struct TrialDistances {
    std::vector<double> input_dist;                // [trial]
    std::vector<std::vector<double>> output_dist;  // [target][trial]
};

TrialDistances pooled_distance_trials(const model::ModelConfig& cfg,
                                      const std::vector<PoolTarget>& targets, double eps,
                                      std::size_t trials, const RngStream& master,
                                      ExecPolicy policy = ExecPolicy::Parallel);

struct PerturbationRow {
    double eps = 0.0;
    double mean_distance = 0.0;
    std::vector<double> exceedance;  // one fraction per sigma in sigma_grid
    double max_slope = 0.0;          // max over trials of output/input distance
};

struct PerturbationReport {
    std::vector<double> sigma_grid;
    std::vector<PerturbationRow> rows;
    std::size_t trials = 0;
    std::uint64_t seed = 0;
};

/// Mean distance, per-sigma exceedance fractions and max slope for one target
/// of a finished trial run. Aggregation is serial and in trial order.
PerturbationRow summarize_trials(double eps, const TrialDistances& dist,
                                 std::size_t target_index,
                                 const std::vector<double>& sigma_grid);

PerturbationReport empirical_expressivity(const model::ModelConfig& cfg,
                                          pooling::PoolKind kind,
                                          const pooling::PoolParams* params, double eps,
                                          const std::vector<double>& sigma_grid,
                                          std::size_t trials, const RngStream& master,
                                          ExecPolicy policy = ExecPolicy::Parallel);

/// Largest observed slope |f(x~) - f(x)|_2 / |x~ - x|_F over seeded pairs.
/// Rejects eps below 1e-9, where the ratio is numerically meaningless.
double empirical_lipschitz(const model::ModelConfig& cfg, pooling::PoolKind kind,
                           const pooling::PoolParams* params, std::size_t trials,
                           double eps, const RngStream& master,
                           ExecPolicy policy = ExecPolicy::Parallel);

struct JacobianCheckReport {
    double max_relative_error = 0.0;
    std::pair<std::size_t, std::size_t> worst_block{0, 0};
    double fd_step = 0.0;
    /// Minimum over draws/heads of (case bound - measured block norm),
    /// per block position. Non-negative everywhere when the theory holds.
    Matrix case_bound_margins;
    double min_margin = 0.0;
};

/// Draws fresh (input, head weights) pairs per trial and compares the analytic
/// Jacobian blocks of the un-projected attention map against central finite
/// differences, recording the Appendix-style case-bound margins.
JacobianCheckReport jacobian_check(const model::ModelConfig& cfg, std::size_t trials,
                                   double fd_step, const RngStream& master,
                                   ExecPolicy policy = ExecPolicy::Parallel);

struct SweepEntry {
    pooling::PoolKind kind;
    PerturbationRow empirical;      // at one eps
    bounds::BoundReport bound;      // at the same (eps, sigma)
};

/// One (pooling, eps) entry per combination. Trials are shared across pooling
/// kinds at each eps, so exact ties between pooled outputs (Sum = n * Avg)
/// hold trial by trial.
std::vector<SweepEntry> sweep(const model::ModelConfig& cfg,
                              const std::vector<pooling::PoolKind>& kinds,
                              const std::vector<double>& eps_grid, double sigma,
                              std::size_t trials, const RngStream& master,
                              ExecPolicy policy = ExecPolicy::Parallel);

}  // namespace poolbound::empirics
