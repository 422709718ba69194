#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "poolbound/model.hpp"
#include "poolbound/pooling.hpp"
#include "poolbound/trainer.hpp"

namespace poolbound::cli {

/// Everything a command needs, parsed from a flat `section.key = value` file.
/// Unknown keys are rejected; all model constraints are re-checked at parse time.
struct RunConfig {
    std::uint64_t master_seed = 20240901;
    std::string output_path = "poolbound.csv";

    // model
    std::size_t n = 8;
    std::size_t d = 16;
    std::size_t heads = 2;
    std::size_t layers = 1;
    double input_bound = 1.0;
    model::AttentionVariant variant = model::AttentionVariant::DotProduct;
    std::optional<std::uint64_t> weight_seed;  // absent: zero weights
    double scsa_nabla = 0.5;
    double scsa_nu = 1.0;
    double scsa_tau = 5.0;
    std::size_t scsa_window = 4;

    // experiment
    std::vector<double> eps_grid{0.001, 0.01, 0.1};
    std::vector<double> sigma_grid{0.1};
    std::size_t trials = 1000;
    double fd_step = 1e-5;

    // training
    trainer::TaskKind task = trainer::TaskKind::LastToken;
    pooling::PoolKind train_pooling = pooling::PoolKind::WeightedAvg;
    std::size_t samples = 512;
    std::size_t epochs = 2000;
    double learning_rate = 0.5;
};

/// Throws ConfigError naming the offending key on any problem.
RunConfig load_config(const std::string& path);
RunConfig parse_config_text(const std::string& text);

/// Materializes the model: weights seeded Gaussian (std 1/sqrt(d)) when
/// weight_seed is set, zero otherwise. Validates the result.
model::ModelConfig build_model(const RunConfig& rc);

}  // namespace poolbound::cli
