#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "poolbound/commands.hpp"

namespace {

struct CommonArgs {
    std::string config_path;
    std::string out_path;
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::uint64_t trials = 0;
    bool trials_set = false;
    bool serial = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "configuration file (key = value lines)");
    cmd->add_option("--out", args.out_path, "output CSV path (overrides the config)");
    cmd->add_option("--seed", args.seed, "master seed (overrides the config)")
        ->each([&args](const std::string&) { args.seed_set = true; });
    cmd->add_option("--trials", args.trials, "trial count (overrides the config)")
        ->each([&args](const std::string&) { args.trials_set = true; });
    cmd->add_flag("--serial", args.serial, "run trial loops serially instead of OpenMP");
}

poolbound::cli::RunConfig resolve(const CommonArgs& args) {
    poolbound::cli::RunConfig rc = args.config_path.empty()
                                       ? poolbound::cli::RunConfig{}
                                       : poolbound::cli::load_config(args.config_path);
    if (!args.out_path.empty()) rc.output_path = args.out_path;
    if (args.seed_set) rc.master_seed = args.seed;
    if (args.trials_set) rc.trials = args.trials;
    return rc;
}

poolbound::empirics::ExecPolicy policy_of(const CommonArgs& args) {
    return args.serial ? poolbound::empirics::ExecPolicy::Serial
                       : poolbound::empirics::ExecPolicy::Parallel;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "Expressivity bounds and empirical verification for Transformer pooling"};
    app.require_subcommand(1);

    CommonArgs bound_args, sweep_args, jac_args, train_args, verify_args;
    double inject_c1_scale = 1.0;

    CLI::App* bound = app.add_subcommand(
        "bound", "closed-form expressivity bounds, one CSV row per (pooling, eps, sigma)");
    add_common(bound, bound_args);
    CLI::App* sweep = app.add_subcommand(
        "sweep", "paired theoretical and Monte Carlo rows over the eps grid");
    add_common(sweep, sweep_args);
    CLI::App* jac = app.add_subcommand(
        "jacobian-check", "analytic attention Jacobian vs central finite differences");
    add_common(jac, jac_args);
    CLI::App* train = app.add_subcommand(
        "train-pool", "fit learnable pooling plus a linear head on a synthetic task");
    add_common(train, train_args);
    CLI::App* verify =
        app.add_subcommand("verify", "run the full verification suite, exit 0 iff green");
    add_common(verify, verify_args);
    verify
        ->add_option("--inject-c1-scale", inject_c1_scale,
                     "self-test hook: scale C1 in the soundness comparison")
        ->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (bound->parsed()) return poolbound::cli::cmd_bound(resolve(bound_args));
        if (sweep->parsed())
            return poolbound::cli::cmd_sweep(resolve(sweep_args), policy_of(sweep_args));
        if (jac->parsed())
            return poolbound::cli::cmd_jacobian_check(resolve(jac_args), policy_of(jac_args));
        if (train->parsed()) return poolbound::cli::cmd_train_pool(resolve(train_args));
        if (verify->parsed()) {
            poolbound::cli::VerifyOptions opts;
            opts.inject_c1_scale = inject_c1_scale;
            opts.policy = policy_of(verify_args);
            return poolbound::cli::cmd_verify(opts);
        }
    } catch (const poolbound::TrainingError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const poolbound::ConfigError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const poolbound::UnsupportedError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::domain_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 2;
}
