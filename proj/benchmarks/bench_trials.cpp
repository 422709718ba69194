// Wall-clock comparison of the serial reference trial loop against the
// OpenMP-parallel one, plus a bit-equality check between the two.

#include <chrono>
#include <cstdio>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "poolbound/empirics.hpp"

using namespace poolbound;

namespace {

model::ModelConfig bench_config() {
    model::ModelConfig cfg;
    cfg.seq_len = 16;
    cfg.embed_dim = 32;
    cfg.num_heads = 4;
    cfg.input_bound = 1.0;
    cfg.variant = model::AttentionVariant::DotProduct;
    linalg::RngStream rng(42, 0);
    for (int l = 0; l < 2; ++l) {
        linalg::RngStream layer_rng = rng.child(l);
        cfg.layers.push_back(model::gaussian_layer(32, 4, layer_rng));
    }
    return cfg;
}

double run_once(const model::ModelConfig& cfg, std::size_t trials,
                empirics::ExecPolicy policy, empirics::TrialDistances& out) {
    std::vector<empirics::PoolTarget> targets{{pooling::PoolKind::Avg, {}},
                                              {pooling::PoolKind::Sum, {}},
                                              {pooling::PoolKind::Max, {}},
                                              {pooling::PoolKind::Last, {}}};
    const auto start = std::chrono::steady_clock::now();
    out = empirics::pooled_distance_trials(cfg, targets, 0.01, trials,
                                           linalg::RngStream(7, 0), policy);
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

int main() {
#ifdef _OPENMP
    std::printf("OpenMP enabled, max threads: %d\n", omp_get_max_threads());
#else
    std::printf("OpenMP not enabled; both runs are serial\n");
#endif
    const model::ModelConfig cfg = bench_config();
    std::printf("%8s %12s %12s %9s %10s\n", "trials", "serial [s]", "parallel [s]",
                "speedup", "identical");
    for (std::size_t trials : {512, 2048, 8192}) {
        empirics::TrialDistances serial_out, parallel_out;
        const double serial_s = run_once(cfg, trials, empirics::ExecPolicy::Serial, serial_out);
        const double parallel_s =
            run_once(cfg, trials, empirics::ExecPolicy::Parallel, parallel_out);
        const bool identical = serial_out.input_dist == parallel_out.input_dist &&
                               serial_out.output_dist == parallel_out.output_dist;
        std::printf("%8zu %12.4f %12.4f %8.2fx %10s\n", trials, serial_s, parallel_s,
                    serial_s / parallel_s, identical ? "yes" : "NO");
    }
    return 0;
}
