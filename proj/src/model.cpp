#include "bnmr/model.hpp"

#include "bnmr/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

namespace bnmr {

namespace {

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

double parse_double(const std::string& key, const std::string& text) {
    double v = 0.0;
    const char* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc() || ptr != end) throw ConfigError("'" + key + "' expects a number, got '" + text + "'");
    return v;
}

template <typename Int>
Int parse_int(const std::string& key, const std::string& text) {
    Int v = 0;
    const char* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc() || ptr != end) throw ConfigError("'" + key + "' expects an integer, got '" + text + "'");
    return v;
}

bool parse_bool(const std::string& key, const std::string& text) {
    if (text == "true" || text == "1" || text == "yes") return true;
    if (text == "false" || text == "0" || text == "no") return false;
    throw ConfigError("'" + key + "' expects true/false, got '" + text + "'");
}

void require_positive(const char* name, double v) {
    if (!(v > 0.0) || !std::isfinite(v)) {
        throw ConfigError(std::string(name) + " must be positive and finite, got " + format_double(v));
    }
}

}  // namespace

void ModelConfig::validate() const {
    if (order < 1) throw ConfigError("order must be >= 1");
    if (!std::isfinite(base_mean)) throw ConfigError("base_mean must be finite");
    require_positive("base_sd", base_sd);
    require_positive("intercept_sd", intercept_sd);
    require_positive("sigma_shape", sigma_shape);
    require_positive("sigma_rate", sigma_rate);
    require_positive("pi_a", pi_a);
    require_positive("pi_b", pi_b);
    require_positive("alpha_shape", alpha_shape);
    require_positive("alpha_rate", alpha_rate);
    if (n_iter <= 0) throw ConfigError("n_iter must be positive");
    if (n_burn < 0 || n_iter <= n_burn) throw ConfigError("n_iter must exceed n_burn (and n_burn >= 0)");
    if (thin < 1) throw ConfigError("thin must be >= 1");
    if (n_kept() < 1) throw ConfigError("n_iter, n_burn and thin leave no retained draws");
    if (eta_sweeps < 1) throw ConfigError("eta_sweeps must be >= 1");
}

std::vector<std::string> config_keys() {
    std::vector<std::string> keys;
    for (const auto& [k, v] : config_entries(ModelConfig{})) keys.push_back(k);
    return keys;
}

std::vector<std::pair<std::string, std::string>> config_entries(const ModelConfig& c) {
    return {
        {"order", std::to_string(c.order)},
        {"base_mean", format_double(c.base_mean)},
        {"base_sd", format_double(c.base_sd)},
        {"intercept_sd", format_double(c.intercept_sd)},
        {"sigma_shape", format_double(c.sigma_shape)},
        {"sigma_rate", format_double(c.sigma_rate)},
        {"pi_a", format_double(c.pi_a)},
        {"pi_b", format_double(c.pi_b)},
        {"alpha_shape", format_double(c.alpha_shape)},
        {"alpha_rate", format_double(c.alpha_rate)},
        {"n_iter", std::to_string(c.n_iter)},
        {"n_burn", std::to_string(c.n_burn)},
        {"thin", std::to_string(c.thin)},
        {"seed", std::to_string(c.seed)},
        {"eta_sweeps", std::to_string(c.eta_sweeps)},
        {"random_scan", c.random_scan ? "true" : "false"},
        {"clustering", c.clustering ? "true" : "false"},
        {"init", c.init == InitMode::Warm ? "warm" : "null"},
    };
}

void set_config_value(ModelConfig& c, const std::string& key, const std::string& raw) {
    const std::string value = trim(raw);
    if (key == "order") c.order = parse_int<int>(key, value);
    else if (key == "base_mean") c.base_mean = parse_double(key, value);
    else if (key == "base_sd") c.base_sd = parse_double(key, value);
    else if (key == "intercept_sd") c.intercept_sd = parse_double(key, value);
    else if (key == "sigma_shape") c.sigma_shape = parse_double(key, value);
    else if (key == "sigma_rate") c.sigma_rate = parse_double(key, value);
    else if (key == "pi_a") c.pi_a = parse_double(key, value);
    else if (key == "pi_b") c.pi_b = parse_double(key, value);
    else if (key == "alpha_shape") c.alpha_shape = parse_double(key, value);
    else if (key == "alpha_rate") c.alpha_rate = parse_double(key, value);
    else if (key == "n_iter") c.n_iter = parse_int<int>(key, value);
    else if (key == "n_burn") c.n_burn = parse_int<int>(key, value);
    else if (key == "thin") c.thin = parse_int<int>(key, value);
    else if (key == "seed") c.seed = parse_int<std::uint64_t>(key, value);
    else if (key == "eta_sweeps") c.eta_sweeps = parse_int<int>(key, value);
    else if (key == "random_scan") c.random_scan = parse_bool(key, value);
    else if (key == "clustering") c.clustering = parse_bool(key, value);
    else if (key == "init") {
        if (value == "null") c.init = InitMode::Null;
        else if (value == "warm") c.init = InitMode::Warm;
        else throw ConfigError("'init' expects null or warm, got '" + value + "'");
    } else {
        throw ConfigError("unknown config key '" + key + "'");
    }
}

void load_config_file(const std::filesystem::path& path, ModelConfig& config) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        if (trim(line).empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": expected key = value");
        }
        set_config_value(config, trim(line.substr(0, eq)), line.substr(eq + 1));
    }
}

void write_config_file(const std::filesystem::path& path, const ModelConfig& config) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write '" + path.string() + "'");
    for (const auto& [k, v] : config_entries(config)) out << k << " = " << v << '\n';
}

int ChainState::n_null() const {
    return static_cast<int>(std::count(labels.begin(), labels.end(), 0));
}

std::vector<int> ChainState::cluster_sizes() const {
    std::vector<int> sizes(eta.size(), 0);
    for (int s : labels)
        if (s > 0) ++sizes[static_cast<std::size_t>(s - 1)];
    return sizes;
}

Eigen::VectorXd ChainState::reconstruct_theta() const {
    Eigen::VectorXd t = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(labels.size()) + 1);
    t(0) = theta(0);
    for (std::size_t k = 0; k < labels.size(); ++k) {
        if (labels[k] > 0) t(static_cast<Eigen::Index>(k) + 1) = eta[static_cast<std::size_t>(labels[k] - 1)];
    }
    return t;
}

void ChainState::check_invariants() const {
    if (theta.size() != static_cast<Eigen::Index>(labels.size()) + 1) {
        throw SamplerError("theta length does not match label count");
    }
    const auto sizes = cluster_sizes();
    for (std::size_t c = 0; c < eta.size(); ++c) {
        if (!(eta[c] > 0.0)) throw SamplerError("cluster value is not positive");
        if (sizes[c] == 0) throw SamplerError("empty cluster present");
    }
    for (int s : labels) {
        if (s < 0 || s > static_cast<int>(eta.size())) throw SamplerError("label out of range");
    }
    if (reconstruct_theta() != theta) throw SamplerError("theta disagrees with labels/eta");
    if (!(sigma2 > 0.0) || !(alpha > 0.0)) throw SamplerError("sigma2 and alpha must be positive");
}

ChainState initial_state(const ModelConfig& config, const Dataset& data, Rng& /*rng*/) {
    config.validate();
    const int m = config.order;
    ChainState s;
    s.theta = Eigen::VectorXd::Zero(m + 1);
    s.labels.assign(static_cast<std::size_t>(m), 0);
    s.sigma2 = 1.0;
    s.alpha = 1.0;
    const double y_mean =
        data.y.empty() ? 0.0
                       : std::accumulate(data.y.begin(), data.y.end(), 0.0) / static_cast<double>(data.y.size());
    s.theta(0) = y_mean;
    if (config.init == InitMode::Warm && !data.y.empty()) {
        const auto [lo, hi] = std::minmax_element(data.y.begin(), data.y.end());
        const double range = *hi - *lo;
        const double step = std::max(0.01, range / m);
        // Straight line through the data centre with total rise M * step.
        s.eta = {step};
        s.labels.assign(static_cast<std::size_t>(m), 1);
        s.theta(0) = y_mean - 0.5 * m * step;
        s.theta.tail(m).setConstant(step);
    }
    return s;
}

}  // namespace bnmr
