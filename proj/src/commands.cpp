#include "poolbound/commands.hpp"

#include <fstream>

#include "poolbound/bounds.hpp"
#include "poolbound/csv.hpp"
#include "poolbound/trainer.hpp"

namespace poolbound::cli {

namespace {

const std::vector<pooling::PoolKind> kFixedKinds{
    pooling::PoolKind::Avg, pooling::PoolKind::Sum, pooling::PoolKind::Max,
    pooling::PoolKind::Last};

std::string joined(const std::vector<double>& values) {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i > 0) out += ';';
        out += fmt(values[i]);
    }
    return out;
}

std::ofstream open_output(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot open output file '" + path + "'");
    return out;
}

constexpr const char* kBoundColumns =
    "variant,pooling,n,d,H,B,L,eps,sigma,c1,c2,ln_factor,pool_factor,lipschitz_total,"
    "gamma,vacuous_flag";

void write_bound_fields(std::ofstream& out, const RunConfig& rc,
                        const bounds::BoundReport& report) {
    out << model::variant_name(report.variant) << ',' << pooling::pool_name(report.kind)
        << ',' << fmt(static_cast<unsigned long long>(rc.n)) << ','
        << fmt(static_cast<unsigned long long>(rc.d)) << ','
        << fmt(static_cast<unsigned long long>(rc.heads)) << ',' << fmt(rc.input_bound)
        << ',' << fmt(static_cast<unsigned long long>(rc.layers)) << ','
        << fmt(report.eps) << ',' << fmt(report.sigma) << ',' << joined(report.c1_per_layer)
        << ',' << joined(report.c2_per_layer) << ',' << fmt(report.ln_factor) << ','
        << fmt(report.pool_factor) << ',' << fmt(report.lipschitz_total) << ','
        << fmt(report.gamma) << ',' << (report.vacuous ? '1' : '0');
}

}  // namespace

int cmd_bound(const RunConfig& rc) {
    const model::ModelConfig cfg = build_model(rc);
    std::ofstream out = open_output(rc.output_path);
    out << kBoundColumns << '\n';
    for (pooling::PoolKind kind : kFixedKinds)
        for (double eps : rc.eps_grid)
            for (double sigma : rc.sigma_grid) {
                const auto report = bounds::gamma_bound(cfg, kind, eps, sigma);
                write_bound_fields(out, rc, report);
                out << '\n';
            }
    return 0;
}

void write_sweep_csv(const RunConfig& rc, const std::string& path,
                     empirics::ExecPolicy policy) {
    const model::ModelConfig cfg = build_model(rc);
    const double sigma = rc.sigma_grid.front();
    const auto entries =
        empirics::sweep(cfg, kFixedKinds, rc.eps_grid, sigma, rc.trials,
                        linalg::RngStream(rc.master_seed, 0), policy);
    std::ofstream out = open_output(path);
    out << kBoundColumns << ",trials,mean_distance,exceedance,max_slope,seed\n";
    for (const auto& entry : entries) {
        write_bound_fields(out, rc, entry.bound);
        out << ',' << fmt(static_cast<unsigned long long>(rc.trials)) << ','
            << fmt(entry.empirical.mean_distance) << ',' << fmt(entry.empirical.exceedance[0])
            << ',' << fmt(entry.empirical.max_slope) << ','
            << fmt(static_cast<unsigned long long>(rc.master_seed)) << '\n';
    }
}

int cmd_sweep(const RunConfig& rc, empirics::ExecPolicy policy) {
    write_sweep_csv(rc, rc.output_path, policy);
    return 0;
}

int cmd_jacobian_check(const RunConfig& rc, empirics::ExecPolicy policy) {
    if (rc.variant != model::AttentionVariant::DotProduct)
        throw UnsupportedError("jacobian-check: only the dot-product variant is analyzed");
    if (rc.layers != 1)
        throw UnsupportedError("jacobian-check: requires model.layers = 1");
    const model::ModelConfig cfg = build_model(rc);
    const auto report = empirics::jacobian_check(cfg, rc.trials, rc.fd_step,
                                                 linalg::RngStream(rc.master_seed, 0), policy);
    std::ofstream out = open_output(rc.output_path);
    out << "n,d,H,trials,fd_step,max_relative_error,worst_i,worst_j,min_margin\n";
    out << fmt(static_cast<unsigned long long>(rc.n)) << ','
        << fmt(static_cast<unsigned long long>(rc.d)) << ','
        << fmt(static_cast<unsigned long long>(rc.heads)) << ','
        << fmt(static_cast<unsigned long long>(rc.trials)) << ',' << fmt(report.fd_step)
        << ',' << fmt(report.max_relative_error) << ','
        << fmt(static_cast<unsigned long long>(report.worst_block.first)) << ','
        << fmt(static_cast<unsigned long long>(report.worst_block.second)) << ','
        << fmt(report.min_margin) << '\n';
    const bool ok = report.max_relative_error <= 1e-4 && report.min_margin >= 0.0;
    return ok ? 0 : 1;
}

namespace {

std::string weights_path_for(const std::string& path) {
    const std::string suffix = ".csv";
    if (path.size() > suffix.size() &&
        path.compare(path.size() - suffix.size(), suffix.size(), suffix) == 0)
        return path.substr(0, path.size() - suffix.size()) + ".weights.csv";
    return path + ".weights.csv";
}

}  // namespace

int cmd_train_pool(const RunConfig& rc) {
    const model::ModelConfig cfg = build_model(rc);
    const auto task = trainer::gen_task(rc.task, rc.n, rc.d, rc.samples,
                                        linalg::RngStream(rc.master_seed, 1), rc.input_bound);
    trainer::TrainConfig tc;
    tc.learning_rate = rc.learning_rate;
    tc.epochs = rc.epochs;
    tc.seed = rc.master_seed;
    const auto head = trainer::train(cfg, rc.train_pooling, task, tc);

    std::ofstream out = open_output(rc.output_path);
    out << "epoch,loss\n";
    for (std::size_t e = 0; e < head.loss_curve.size(); ++e)
        out << fmt(static_cast<unsigned long long>(e)) << ',' << fmt(head.loss_curve[e])
            << '\n';

    std::ofstream wout = open_output(weights_path_for(rc.output_path));
    wout << "task,pooling,n,d,samples,epochs,learning_rate,seed,final_loss,entropy,"
            "argmax_index,last_mass\n";
    if (rc.train_pooling == pooling::PoolKind::WeightedAvg) {
        const auto stats = trainer::weight_stats(head.pool_params, rc.train_pooling);
        wout << trainer::task_name(rc.task) << ',' << pooling::pool_name(rc.train_pooling)
             << ',' << fmt(static_cast<unsigned long long>(rc.n)) << ','
             << fmt(static_cast<unsigned long long>(rc.d)) << ','
             << fmt(static_cast<unsigned long long>(rc.samples)) << ','
             << fmt(static_cast<unsigned long long>(rc.epochs)) << ','
             << fmt(rc.learning_rate) << ',' << fmt(static_cast<unsigned long long>(rc.master_seed))
             << ',' << fmt(head.loss_curve.back()) << ',' << fmt(stats.entropy) << ','
             << fmt(static_cast<unsigned long long>(stats.argmax_index)) << ','
             << fmt(stats.last_mass) << '\n';
    }
    return 0;
}

int cmd_verify(const VerifyOptions& opts) {
    const auto results = run_verification(opts);
    print_results(results);
    return all_passed(results) ? 0 : 1;
}

}  // namespace poolbound::cli
