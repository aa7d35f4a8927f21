#include "pdfool/config.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <sstream>

namespace pdfool {

namespace {

// Every static key with its default. An empty default means "unset".
const std::vector<std::pair<const char*, const char*>>& known_keys() {
    static const std::vector<std::pair<const char*, const char*>> keys = {
        {"run.seed", "1"},
        {"data.source", "simulate"},
        {"data.csv", ""},
        {"data.schema", ""},
        {"data.target", "y"},
        {"sim.n", "100000"},
        {"sim.features", "6"},
        {"sim.correlation", "0.3"},
        {"sim.noise_sd", "0.5"},
        {"sim.coefficients", ""},
        {"folds.k", "5"},
        {"model.task", "regression"},
        {"model.hidden", "20,10"},
        {"model.dropout", "0"},
        {"model.learn_rate", "0.05"},
        {"model.max_epochs", "200"},
        {"model.patience", "8"},
        {"model.validation_fraction", "0.1"},
        {"model.file", ""},
        {"classifier.hidden", "20,10"},
        {"classifier.dropout", "0.2"},
        {"classifier.learn_rate", "0.05"},
        {"classifier.max_epochs", "60"},
        {"classifier.patience", "5"},
        {"classifier.validation_fraction", "0.1"},
        {"classifier.weight_real", "1"},
        {"classifier.weight_synthetic", "1"},
        {"allocator.hidden", "20,10"},
        {"allocator.dropout", "0.2"},
        {"allocator.learn_rate", "0.05"},
        {"allocator.max_epochs", "60"},
        {"allocator.patience", "5"},
        {"allocator.validation_fraction", "0.1"},
        {"allocator.weight_real", "1"},
        {"attack.features", ""},
        {"attack.threshold", "0.5"},
        {"attack.multiplier", "0"},
        {"attack.write_fold_data", "0"},
        {"grid.policy", "auto"},
        {"grid.quantiles", "20"},
        {"metrics.norm", "l2"},
        {"sweep.thresholds", "0.05,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,0.95"},
        {"evaluate.attack_manifest", ""},
        {"plot.curves", ""},
        {"plot.ice", ""},
        {"plot.name", "plot.svg"},
        {"plot.max_ice", "200"},
    };
    return keys;
}

bool is_known_key(const std::string& key) {
    for (const auto& [name, value] : known_keys())
        if (key == name) return true;
    return key.rfind("attack.target.", 0) == 0;
}

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string token;
    while (std::getline(ss, token, sep)) out.push_back(token);
    return out;
}

}  // namespace

void RunConfig::set(const std::string& key, const std::string& value, const std::string& origin) {
    if (!is_known_key(key)) throw ConfigError(origin + ": unknown config key '" + key + "'");
    kv_[key] = value;
}

void RunConfig::fill_defaults() {
    for (const auto& [name, value] : known_keys()) kv_.emplace(name, value);
}

RunConfig RunConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    return from_lines(lines, path);
}

RunConfig RunConfig::from_lines(const std::vector<std::string>& lines, const std::string& origin) {
    RunConfig config;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const std::string stripped = trim(lines[i]);
        if (stripped.empty() || stripped[0] == '#') continue;
        const auto eq = stripped.find('=');
        if (eq == std::string::npos)
            throw ConfigError(origin + ": line " + std::to_string(i + 1) + ": expected key=value");
        config.set(trim(stripped.substr(0, eq)), trim(stripped.substr(eq + 1)),
                   origin + ": line " + std::to_string(i + 1));
    }
    config.fill_defaults();
    return config;
}

RunConfig RunConfig::from_pairs(const std::vector<std::pair<std::string, std::string>>& pairs) {
    RunConfig config;
    for (const auto& [key, value] : pairs) config.set(key, value, "config");
    config.fill_defaults();
    return config;
}

bool RunConfig::has(const std::string& key) const {
    auto it = kv_.find(key);
    return it != kv_.end() && !it->second.empty();
}

const std::string& RunConfig::get(const std::string& key) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) throw ConfigError("missing config key '" + key + "'");
    return it->second;
}

double RunConfig::number(const std::string& key) const {
    try {
        return parse_double(get(key));
    } catch (const DataError&) {
        throw ConfigError("config key '" + key + "': not a number ('" + get(key) + "')");
    }
}

std::size_t RunConfig::count(const std::string& key) const {
    long long v;
    try {
        v = parse_int(get(key));
    } catch (const DataError&) {
        throw ConfigError("config key '" + key + "': not an integer ('" + get(key) + "')");
    }
    if (v < 0) throw ConfigError("config key '" + key + "': must be non-negative");
    return static_cast<std::size_t>(v);
}

std::uint64_t RunConfig::seed(const std::string& key) const {
    try {
        return static_cast<std::uint64_t>(parse_int(get(key)));
    } catch (const DataError&) {
        throw ConfigError("config key '" + key + "': not an integer seed");
    }
}

bool RunConfig::flag(const std::string& key) const {
    const std::string& v = get(key);
    if (v == "1" || v == "true") return true;
    if (v == "0" || v == "false") return false;
    throw ConfigError("config key '" + key + "': expected 0/1");
}

std::vector<double> RunConfig::numbers(const std::string& key) const {
    std::vector<double> out;
    for (const auto& token : split(get(key), ',')) {
        try {
            out.push_back(parse_double(trim(token)));
        } catch (const DataError&) {
            throw ConfigError("config key '" + key + "': not a number list");
        }
    }
    return out;
}

std::vector<std::size_t> RunConfig::counts(const std::string& key) const {
    std::vector<std::size_t> out;
    for (const auto& token : split(get(key), ',')) {
        long long v;
        try {
            v = parse_int(trim(token));
        } catch (const DataError&) {
            throw ConfigError("config key '" + key + "': not an integer list");
        }
        if (v < 0) throw ConfigError("config key '" + key + "': negative entry");
        out.push_back(static_cast<std::size_t>(v));
    }
    return out;
}

std::vector<std::pair<std::string, std::string>> RunConfig::resolved() const {
    return {kv_.begin(), kv_.end()};
}

SimulationConfig make_sim_config(const RunConfig& config) {
    SimulationConfig sim;
    sim.n_rows = config.count("sim.n");
    sim.n_features = config.count("sim.features");
    sim.pairwise_correlation = config.number("sim.correlation");
    sim.noise_sd = config.number("sim.noise_sd");
    if (config.has("sim.coefficients")) sim.coefficients = config.numbers("sim.coefficients");
    sim.seed = derive_seed(config.seed("run.seed"), "stage/simulate");
    return sim;
}

Dataset load_dataset(const RunConfig& config) {
    const std::string& source = config.get("data.source");
    if (source == "simulate") return simulate_correlated_gaussian(make_sim_config(config));
    if (source == "csv") {
        if (!config.has("data.csv") || !config.has("data.schema"))
            throw ConfigError("data.source=csv requires data.csv and data.schema");
        const auto schema = load_schema_file(config.get("data.schema"));
        return load_csv(config.get("data.csv"), schema, config.get("data.target"));
    }
    throw ConfigError("data.source must be 'simulate' or 'csv'");
}

LearnerSettings make_learner_settings(const RunConfig& config, const std::string& section) {
    LearnerSettings s;
    s.hidden = config.counts(section + ".hidden");
    s.dropout = config.number(section + ".dropout");
    s.learn_rate = config.number(section + ".learn_rate");
    s.max_epochs = config.count(section + ".max_epochs");
    s.patience = config.count(section + ".patience");
    s.validation_fraction = config.number(section + ".validation_fraction");
    return s;
}

TargetSpec parse_target_spec(const std::string& feature, const std::string& text) {
    TargetSpec spec;
    spec.feature = feature;
    if (text == "flat@mean") {
        spec.kind = TargetSpec::Kind::flat_at_mean;
        return spec;
    }
    if (text.rfind("flat:", 0) == 0) {
        spec.kind = TargetSpec::Kind::flat;
        spec.level = parse_double(text.substr(5));
        return spec;
    }
    if (text.rfind("linear:", 0) == 0) {
        const std::string rest = text.substr(7);
        const auto at = rest.find("@mean");
        if (at != std::string::npos && at == rest.size() - 5) {
            spec.kind = TargetSpec::Kind::linear_at_mean;
            spec.slope = parse_double(rest.substr(0, at));
            return spec;
        }
        const auto colon = rest.find(':');
        if (colon == std::string::npos)
            throw ConfigError("target for '" + feature + "': linear needs 'linear:<slope>@mean' or 'linear:<slope>:<intercept>'");
        spec.kind = TargetSpec::Kind::linear;
        spec.slope = parse_double(rest.substr(0, colon));
        spec.intercept = parse_double(rest.substr(colon + 1));
        return spec;
    }
    if (text.rfind("file:", 0) == 0) {
        spec.kind = TargetSpec::Kind::explicit_values;
        std::istringstream in(read_text_file(text.substr(5)));
        std::string line;
        while (std::getline(in, line)) {
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty()) continue;
            spec.values.push_back(parse_double(line));
        }
        if (spec.values.empty()) throw ConfigError("target file for '" + feature + "' is empty");
        return spec;
    }
    throw ConfigError("target for '" + feature + "': unknown form '" + text + "'");
}

namespace {

GridPolicy parse_grid_policy(const std::string& text) {
    if (text == "auto") return GridPolicy::automatic;
    if (text == "all_unique") return GridPolicy::all_unique;
    if (text == "quantile") return GridPolicy::quantile;
    throw ConfigError("grid.policy must be auto, all_unique or quantile");
}

}  // namespace

AttackSettings make_attack_settings(const RunConfig& config) {
    AttackSettings s;
    s.folds = config.count("folds.k");
    s.seed = config.seed("run.seed");
    s.f_learner = make_learner_settings(config, "model");
    s.f_task = mlp_task_from_name(config.get("model.task"));
    if (s.f_task == MlpTask::multiclass) throw ConfigError("model.task: the attacked model must be regression or binary");
    if (config.has("model.file")) s.external_model = config.get("model.file");
    s.c_learner = make_learner_settings(config, "classifier");
    s.weight_real = config.number("classifier.weight_real");
    s.weight_synthetic = config.number("classifier.weight_synthetic");
    s.threshold = config.number("attack.threshold");
    s.multiplier = config.count("attack.multiplier");
    s.g_learner = make_learner_settings(config, "allocator");
    s.allocator_weight_real = config.number("allocator.weight_real");
    s.grid_policy = parse_grid_policy(config.get("grid.policy"));
    s.grid_quantiles = config.count("grid.quantiles");
    s.norm = curve_norm_from_name(config.get("metrics.norm"));

    if (!config.has("attack.features")) throw ConfigError("attack.features: no targeted features configured");
    for (const auto& raw : split(config.get("attack.features"), ',')) {
        const std::string feature = trim(raw);
        if (feature.empty()) throw ConfigError("attack.features: empty feature name");
        const std::string key = "attack.target." + feature;
        if (!config.has(key)) throw ConfigError("missing target spec '" + key + "'");
        s.targets.push_back(parse_target_spec(feature, config.get(key)));
    }
    return s;
}

SweepSettings make_sweep_settings(const RunConfig& config) {
    const AttackSettings attack = make_attack_settings(config);
    if (attack.targets.size() != 1) throw ConfigError("sweep runs in single-feature mode: configure exactly one target");
    SweepSettings s;
    s.folds = attack.folds;
    s.seed = attack.seed;
    s.f_config = make_mlp_config(attack.f_learner, attack.f_task, 1, 0);
    s.c_config = make_mlp_config(attack.c_learner, MlpTask::binary, 1, 0);
    s.c_config.class_weights = {attack.weight_real, attack.weight_synthetic};
    s.multiplier = attack.multiplier;
    s.target = attack.targets[0];
    s.grid_policy = attack.grid_policy;
    s.grid_quantiles = attack.grid_quantiles;
    s.thresholds = config.numbers("sweep.thresholds");
    s.norm = attack.norm;
    return s;
}

}  // namespace pdfool
