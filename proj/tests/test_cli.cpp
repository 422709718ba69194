#include <cstdlib>
#include <doctest.h>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include "poolbound/commands.hpp"
#include "poolbound/csv.hpp"

using namespace poolbound;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
    const fs::path dir = fs::temp_directory_path() / "poolbound_cli_tests";
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::stringstream ss(text);
    std::string line;
    while (std::getline(ss, line)) {
        std::vector<std::string> fields;
        std::stringstream ls(line);
        std::string field;
        while (std::getline(ls, field, ',')) fields.push_back(field);
        rows.push_back(fields);
    }
    return rows;
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(POOLBOUND_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

}  // namespace

TEST_CASE("shortest round-trip decimal formatting") {
    CHECK(cli::fmt(0.5) == "0.5");
    CHECK(cli::fmt(2.0) == "2");
    CHECK(cli::fmt(0.1) == "0.1");
    CHECK(cli::fmt(1.0 / 3.0) == "0.3333333333333333");
    CHECK(cli::fmt(1234ULL) == "1234");
}

TEST_CASE("config parsing: defaults, overrides, and rejection") {
    SUBCASE("values land where they should") {
        const auto rc = cli::parse_config_text(
            "seed = 9\n"
            "model.n = 6\n"
            "model.d = 12  # comment\n"
            "model.heads = 3\n"
            "model.variant = l2\n"
            "experiment.eps_grid = 0.01, 0.1\n");
        CHECK(rc.master_seed == 9);
        CHECK(rc.n == 6);
        CHECK(rc.d == 12);
        CHECK(rc.heads == 3);
        CHECK(rc.variant == model::AttentionVariant::L2Tied);
        CHECK(rc.eps_grid == std::vector<double>{0.01, 0.1});
    }

    SUBCASE("unknown keys are rejected") {
        CHECK_THROWS_AS(cli::parse_config_text("model.nn = 4\n"), ConfigError);
    }

    SUBCASE("bad values name the offending key") {
        try {
            cli::parse_config_text("model.d = 1\n");
            FAIL("expected a ConfigError");
        } catch (const ConfigError& e) {
            CHECK(std::string(e.what()).find("model.d") != std::string::npos);
        }
    }

    SUBCASE("constraints are re-validated at parse time") {
        CHECK_THROWS_AS(cli::parse_config_text("model.d = 8\nmodel.heads = 3\n"), ConfigError);
        CHECK_THROWS_AS(cli::parse_config_text("experiment.eps_grid = 0.1, 0.1\n"),
                        ConfigError);
        CHECK_THROWS_AS(
            cli::parse_config_text("model.variant = scsa\nmodel.n = 9\nmodel.scsa_window = 4\n"),
            ConfigError);
        CHECK_THROWS_AS(cli::parse_config_text("seed 9\n"), ConfigError);
        CHECK_THROWS_AS(cli::parse_config_text("seed = 9\nseed = 10\n"), ConfigError);
    }
}

TEST_CASE("bound command emits the documented schema with plug-in values") {
    cli::RunConfig rc;
    rc.n = 4;
    rc.d = 2;
    rc.heads = 1;
    rc.layers = 1;
    rc.weight_seed.reset();  // zero weights
    rc.eps_grid = {0.25};
    rc.sigma_grid = {0.25};
    const fs::path out = temp_dir() / "bound.csv";
    rc.output_path = out.string();
    REQUIRE(cli::cmd_bound(rc) == 0);

    const auto rows = parse_csv(slurp(out));
    REQUIRE(rows.size() == 5);  // header + 4 pooling kinds
    CHECK(rows[0][0] == "variant");
    CHECK(rows[0].size() == 16);

    double gamma_avg = 0.0, gamma_sum = 0.0;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        REQUIRE(rows[r].size() == 16);
        if (rows[r][1] == "avg") gamma_avg = std::stod(rows[r][14]);
        if (rows[r][1] == "sum") gamma_sum = std::stod(rows[r][14]);
    }
    CHECK(gamma_avg == 2.0);             // (eps/sigma) * 1/sqrt(4) * (2/1)^2
    CHECK(gamma_sum == 4.0 * gamma_avg);  // factor ratio n
    fs::remove(out);
}

TEST_CASE("sweep command: row count and byte-identical reruns") {
    cli::RunConfig rc;
    rc.n = 4;
    rc.d = 4;
    rc.heads = 1;
    rc.layers = 1;
    rc.weight_seed = 13;
    rc.trials = 64;
    rc.eps_grid = {0.01, 0.1};
    rc.sigma_grid = {0.05};
    rc.master_seed = 55;

    const fs::path a = temp_dir() / "sweep_a.csv";
    const fs::path b = temp_dir() / "sweep_b.csv";
    rc.output_path = a.string();
    REQUIRE(cli::cmd_sweep(rc) == 0);
    rc.output_path = b.string();
    REQUIRE(cli::cmd_sweep(rc) == 0);

    const std::string ca = slurp(a);
    CHECK(ca == slurp(b));

    const auto rows = parse_csv(ca);
    CHECK(rows.size() == 1 + 4 * 2);  // header + kinds * eps grid
    REQUIRE(rows[1].size() == 21);
    // empirical max_slope stays below the theoretical product, row by row
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const double pool_factor = std::stod(rows[r][12]);
        const double lipschitz_total = std::stod(rows[r][13]);
        const double max_slope = std::stod(rows[r][19]);
        CHECK(max_slope <= pool_factor * lipschitz_total);
    }
    fs::remove(a);
    fs::remove(b);
}

TEST_CASE("train-pool command writes loss and weight stats") {
    cli::RunConfig rc;
    rc.n = 8;
    rc.d = 4;
    rc.heads = 1;
    rc.layers = 1;
    rc.weight_seed.reset();
    rc.task = trainer::TaskKind::LastToken;
    rc.samples = 64;
    rc.epochs = 600;
    rc.learning_rate = 0.9;
    const fs::path out = temp_dir() / "train.csv";
    rc.output_path = out.string();
    REQUIRE(cli::cmd_train_pool(rc) == 0);

    const auto loss_rows = parse_csv(slurp(out));
    REQUIRE(loss_rows.size() == 602);  // header + epochs + final
    CHECK(std::stod(loss_rows.back()[1]) <= std::stod(loss_rows[1][1]));

    const fs::path weights = temp_dir() / "train.weights.csv";
    const auto stat_rows = parse_csv(slurp(weights));
    REQUIRE(stat_rows.size() == 2);
    CHECK(std::stod(stat_rows[1][11]) > 0.5);  // last_mass well above uniform

    SUBCASE("reruns with the same seed are byte-identical") {
        const fs::path again = temp_dir() / "train_again.csv";
        rc.output_path = again.string();
        REQUIRE(cli::cmd_train_pool(rc) == 0);
        CHECK(slurp(out) == slurp(again));
        CHECK(slurp(weights) == slurp(temp_dir() / "train_again.weights.csv"));
        fs::remove(again);
        fs::remove(temp_dir() / "train_again.weights.csv");
    }
    fs::remove(out);
    fs::remove(weights);
}

TEST_CASE("cli subprocess exit codes") {
    const fs::path dir = temp_dir();

    SUBCASE("missing required key exits 2 and names it") {
        const fs::path cfg = dir / "bad.conf";
        std::ofstream(cfg) << "model.d = 1\n";
        CHECK(run_cli("bound --config " + cfg.string()) == 2);
        fs::remove(cfg);
    }

    SUBCASE("unknown key exits 2") {
        const fs::path cfg = dir / "unknown.conf";
        std::ofstream(cfg) << "model.dd = 4\n";
        CHECK(run_cli("sweep --config " + cfg.string()) == 2);
        fs::remove(cfg);
    }

    SUBCASE("jacobian check on the scsa variant exits 2") {
        const fs::path cfg = dir / "scsa.conf";
        std::ofstream(cfg) << "model.variant = scsa\nmodel.n = 8\nmodel.scsa_window = 4\n";
        CHECK(run_cli("jacobian-check --config " + cfg.string()) == 2);
        fs::remove(cfg);
    }

    SUBCASE("coarse fd step fails the jacobian gate with exit 1") {
        const fs::path cfg = dir / "coarse.conf";
        std::ofstream(cfg) << "model.n = 4\nmodel.d = 4\nmodel.heads = 1\n"
                              "experiment.trials = 4\nexperiment.fd_step = 0.1\n";
        const fs::path out = dir / "coarse.csv";
        CHECK(run_cli("jacobian-check --config " + cfg.string() + " --out " + out.string()) ==
              1);
        CHECK(!slurp(out).empty());  // report written regardless
        fs::remove(cfg);
        fs::remove(out);
    }

    SUBCASE("default jacobian check passes with exit 0") {
        const fs::path cfg = dir / "jac.conf";
        std::ofstream(cfg) << "model.n = 4\nmodel.d = 4\nmodel.heads = 1\n"
                              "experiment.trials = 8\n";
        const fs::path out = dir / "jac.csv";
        CHECK(run_cli("jacobian-check --config " + cfg.string() + " --out " + out.string()) ==
              0);
        fs::remove(cfg);
        fs::remove(out);
    }

    SUBCASE("sweep is byte-identical across processes and policies") {
        const fs::path cfg = dir / "sweep.conf";
        std::ofstream(cfg) << "model.n = 4\nmodel.d = 4\nmodel.heads = 1\n"
                              "model.weight_seed = 5\nexperiment.trials = 32\n";
        const fs::path a = dir / "proc_a.csv";
        const fs::path b = dir / "proc_b.csv";
        const fs::path c = dir / "proc_serial.csv";
        CHECK(run_cli("sweep --config " + cfg.string() + " --out " + a.string()) == 0);
        CHECK(run_cli("sweep --config " + cfg.string() + " --out " + b.string()) == 0);
        CHECK(run_cli("sweep --config " + cfg.string() + " --out " + c.string() +
                      " --serial") == 0);
        const std::string ra = slurp(a);
        CHECK(!ra.empty());
        CHECK(ra == slurp(b));
        CHECK(ra == slurp(c));
        fs::remove(cfg);
        fs::remove(a);
        fs::remove(b);
        fs::remove(c);
    }
}
