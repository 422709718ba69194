#pragma once

#include <string>
#include <vector>

#include "poolbound/empirics.hpp"

namespace poolbound::cli {

struct VerifyOptions {
    /// Self-test hook: scales every C1 entering the soundness comparison.
    /// Values well below 1 must make the soundness criterion fail.
    double inject_c1_scale = 1.0;
    empirics::ExecPolicy policy = empirics::ExecPolicy::Parallel;
};

struct CriterionResult {
    int id = 0;
    std::string name;
    bool passed = false;
    double seconds = 0.0;
    std::string detail;
};

/// Runs the full verification suite (exact identities, oracle agreement,
/// bound soundness, training thresholds, CSV determinism, negative control).
std::vector<CriterionResult> run_verification(const VerifyOptions& opts);

bool all_passed(const std::vector<CriterionResult>& results);
void print_results(const std::vector<CriterionResult>& results);

}  // namespace poolbound::cli
