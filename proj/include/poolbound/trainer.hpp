#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "poolbound/model.hpp"
#include "poolbound/pooling.hpp"

namespace poolbound::trainer {

using linalg::Matrix;
using linalg::RngStream;
using linalg::Vector;

enum class TaskKind { GlobalMean, LastToken, Mixed };

const char* task_name(TaskKind kind);

/// Regression task whose target depends on a known slice of the input:
/// GlobalMean on the column mean, LastToken on the final row, Mixed on the
/// (coefficient 0.5) average of both. Targets are built from a fixed probe.
struct SyntheticTask {
    TaskKind kind;
    std::vector<Matrix> inputs;
    std::vector<double> targets;
    Vector probe;
    std::uint64_t seed = 0;
};

struct TrainConfig {
    double learning_rate = 0.1;
    std::size_t epochs = 1000;
    std::size_t batch = 0;  // reserved; descent is full-batch
    std::uint64_t seed = 0;
    /// When > 0, compare analytic gradients against central differences every
    /// this many epochs; the worst relative error lands in the result.
    std::size_t grad_check_every = 0;
};

struct TrainedHead {
    pooling::PoolParams pool_params;
    Vector head_w;  // d
    double head_b = 0.0;
    std::vector<double> loss_curve;  // loss before each epoch, plus the final loss
    double fd_max_rel_error = 0.0;   // populated when grad_check_every > 0
};

struct WeightStats {
    double entropy = 0.0;          // natural log
    std::size_t argmax_index = 0;  // 0-based position of the largest weight
    double last_mass = 0.0;        // weight on the final position
};

SyntheticTask gen_task(TaskKind kind, std::size_t seq_len, std::size_t embed_dim,
                       std::size_t samples, RngStream rng, double input_bound = 1.0);

/// Frozen-backbone fit of the learnable pooling parameters and a linear head
/// by full-batch gradient descent on the mean squared error. Backbone outputs
/// are computed once; gradients flow only through pooling and the head.
TrainedHead train(const model::ModelConfig& cfg, pooling::PoolKind kind,
                  const SyntheticTask& task, const TrainConfig& tc);

WeightStats weight_stats(const pooling::PoolParams& params, pooling::PoolKind kind);

}  // namespace poolbound::trainer
