#pragma once

#include <string>

#include "poolbound/config.hpp"
#include "poolbound/empirics.hpp"
#include "poolbound/verify.hpp"

namespace poolbound::cli {

/// Closed-form bound rows, one per (pooling, eps, sigma). Returns the exit code.
int cmd_bound(const RunConfig& rc);

/// Paired theoretical + empirical rows, one per (pooling, eps), at the first
/// sigma of the sigma grid.
int cmd_sweep(const RunConfig& rc,
              empirics::ExecPolicy policy = empirics::ExecPolicy::Parallel);

/// Analytic-vs-finite-difference check of the attention Jacobian.
/// Exit 0 iff the max relative error is <= 1e-4 and all case margins are >= 0.
int cmd_jacobian_check(const RunConfig& rc,
                       empirics::ExecPolicy policy = empirics::ExecPolicy::Parallel);

/// Trains learnable pooling on the configured synthetic task; writes the loss
/// curve and (for weighted-average pooling) the weight statistics.
int cmd_train_pool(const RunConfig& rc);

/// Full verification suite; exit 0 iff every criterion passes.
int cmd_verify(const VerifyOptions& opts);

/// The sweep's CSV emission, reused by the determinism criterion.
void write_sweep_csv(const RunConfig& rc, const std::string& path,
                     empirics::ExecPolicy policy);

}  // namespace poolbound::cli
