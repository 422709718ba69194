#include "poolbound/config.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

namespace poolbound::cli {

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

double parse_double(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const double v = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config: key '" + key + "' expects a number, got '" + value + "'");
    }
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
    std::uint64_t out = 0;
    const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc{} || ptr != value.data() + value.size())
        throw ConfigError("config: key '" + key + "' expects a non-negative integer, got '" +
                          value + "'");
    return out;
}

std::vector<double> parse_double_list(const std::string& key, const std::string& value) {
    std::vector<double> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(parse_double(key, item));
    }
    if (out.empty()) throw ConfigError("config: key '" + key + "' expects a list of numbers");
    return out;
}

model::AttentionVariant parse_variant(const std::string& value) {
    if (value == "dot") return model::AttentionVariant::DotProduct;
    if (value == "l2") return model::AttentionVariant::L2Tied;
    if (value == "scsa") return model::AttentionVariant::Scsa;
    throw ConfigError("config: key 'model.variant' expects dot|l2|scsa, got '" + value + "'");
}

trainer::TaskKind parse_task(const std::string& value) {
    if (value == "global_mean") return trainer::TaskKind::GlobalMean;
    if (value == "last_token") return trainer::TaskKind::LastToken;
    if (value == "mixed") return trainer::TaskKind::Mixed;
    throw ConfigError(
        "config: key 'training.task' expects global_mean|last_token|mixed, got '" + value +
        "'");
}

pooling::PoolKind parse_train_pooling(const std::string& value) {
    if (value == "wavg") return pooling::PoolKind::WeightedAvg;
    if (value == "attn") return pooling::PoolKind::Attention;
    throw ConfigError("config: key 'training.pooling' expects wavg|attn, got '" + value + "'");
}

}  // namespace

RunConfig parse_config_text(const std::string& text) {
    RunConfig rc;
    std::set<std::string> seen;
    std::stringstream ss(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config: line " + std::to_string(lineno) +
                              " is not of the form key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty())
            throw ConfigError("config: line " + std::to_string(lineno) +
                              " has an empty key or value");
        if (!seen.insert(key).second)
            throw ConfigError("config: duplicate key '" + key + "'");

        if (key == "seed") rc.master_seed = parse_u64(key, value);
        else if (key == "output") rc.output_path = value;
        else if (key == "model.n") rc.n = parse_u64(key, value);
        else if (key == "model.d") rc.d = parse_u64(key, value);
        else if (key == "model.heads") rc.heads = parse_u64(key, value);
        else if (key == "model.layers") rc.layers = parse_u64(key, value);
        else if (key == "model.bound") rc.input_bound = parse_double(key, value);
        else if (key == "model.variant") rc.variant = parse_variant(value);
        else if (key == "model.weight_seed") rc.weight_seed = parse_u64(key, value);
        else if (key == "model.scsa_nabla") rc.scsa_nabla = parse_double(key, value);
        else if (key == "model.scsa_nu") rc.scsa_nu = parse_double(key, value);
        else if (key == "model.scsa_tau") rc.scsa_tau = parse_double(key, value);
        else if (key == "model.scsa_window") rc.scsa_window = parse_u64(key, value);
        else if (key == "experiment.eps_grid") rc.eps_grid = parse_double_list(key, value);
        else if (key == "experiment.sigma_grid") rc.sigma_grid = parse_double_list(key, value);
        else if (key == "experiment.trials") rc.trials = parse_u64(key, value);
        else if (key == "experiment.fd_step") rc.fd_step = parse_double(key, value);
        else if (key == "training.task") rc.task = parse_task(value);
        else if (key == "training.pooling") rc.train_pooling = parse_train_pooling(value);
        else if (key == "training.samples") rc.samples = parse_u64(key, value);
        else if (key == "training.epochs") rc.epochs = parse_u64(key, value);
        else if (key == "training.learning_rate") rc.learning_rate = parse_double(key, value);
        else throw ConfigError("config: unknown key '" + key + "'");
    }

    if (rc.n == 0) throw ConfigError("config: 'model.n' must be >= 1");
    if (rc.d < 2) throw ConfigError("config: 'model.d' must be >= 2");
    if (rc.heads == 0 || rc.d % rc.heads != 0)
        throw ConfigError("config: 'model.heads' must divide 'model.d'");
    if (rc.layers == 0) throw ConfigError("config: 'model.layers' must be >= 1");
    if (!(rc.input_bound > 0.0)) throw ConfigError("config: 'model.bound' must be positive");
    if (rc.variant == model::AttentionVariant::Scsa) {
        if (rc.scsa_window < 2 || rc.n % rc.scsa_window != 0)
            throw ConfigError("config: 'model.scsa_window' must be >= 2 and divide 'model.n'");
        if (!(rc.scsa_nabla > 0.0) || !(rc.scsa_nu > 0.0) || !(rc.scsa_tau > 0.0))
            throw ConfigError("config: 'model.scsa_*' parameters must be positive");
    }
    for (std::size_t i = 1; i < rc.eps_grid.size(); ++i)
        if (!(rc.eps_grid[i] > rc.eps_grid[i - 1]))
            throw ConfigError("config: 'experiment.eps_grid' must be strictly increasing");
    for (double s : rc.sigma_grid)
        if (!(s > 0.0)) throw ConfigError("config: 'experiment.sigma_grid' must be positive");
    if (rc.sigma_grid.empty())
        throw ConfigError("config: 'experiment.sigma_grid' must not be empty");
    if (rc.trials == 0) throw ConfigError("config: 'experiment.trials' must be >= 1");
    if (!(rc.fd_step > 0.0)) throw ConfigError("config: 'experiment.fd_step' must be positive");
    if (rc.samples == 0) throw ConfigError("config: 'training.samples' must be >= 1");
    if (rc.epochs == 0) throw ConfigError("config: 'training.epochs' must be >= 1");
    if (!(rc.learning_rate > 0.0))
        throw ConfigError("config: 'training.learning_rate' must be positive");
    return rc;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

model::ModelConfig build_model(const RunConfig& rc) {
    model::ModelConfig cfg;
    cfg.seq_len = rc.n;
    cfg.embed_dim = rc.d;
    cfg.num_heads = rc.heads;
    cfg.input_bound = rc.input_bound;
    cfg.variant = rc.variant;
    if (rc.variant == model::AttentionVariant::Scsa)
        cfg.scsa = model::ScsaParams{rc.scsa_nabla, rc.scsa_nu, rc.scsa_tau, rc.scsa_window};

    if (rc.weight_seed.has_value()) {
        linalg::RngStream rng(*rc.weight_seed, 0);
        for (std::size_t l = 0; l < rc.layers; ++l) {
            linalg::RngStream layer_rng = rng.child(l);
            cfg.layers.push_back(
                model::gaussian_layer(rc.d, rc.heads, layer_rng, rc.variant));
        }
    } else {
        for (std::size_t l = 0; l < rc.layers; ++l)
            cfg.layers.push_back(model::zero_layer(rc.d, rc.heads, rc.variant));
    }
    cfg.validate();
    return cfg;
}

}  // namespace poolbound::cli
