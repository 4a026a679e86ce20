#pragma once

#include "bnmr/data_pipeline.hpp"
#include "bnmr/rng.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace bnmr {

enum class InitMode { Null, Warm };

/// Hyperparameters and MCMC controls. Defaults are tuned for a standardized outcome.
struct ModelConfig {
    int order = 50;             // Bernstein order M
    double base_mean = 0.5;     // mu of the truncated-normal base measure
    double base_sd = 0.25;      // phi
    double intercept_sd = 10.0; // phi_0, prior sd of theta_0
    double sigma_shape = 0.1;   // a: sigma^{-2} ~ Gamma(a, b)
    double sigma_rate = 0.1;    // b
    double pi_a = 1.0;          // pi ~ Beta(pi_a, pi_b), pi = prior mass at zero
    double pi_b = 1.0;
    double alpha_shape = 1.0;   // alpha ~ Gamma(alpha_shape, alpha_rate)
    double alpha_rate = 1.0;
    int n_iter = 50000;
    int n_burn = 25000;
    int thin = 10;
    std::uint64_t seed = 1;
    int eta_sweeps = 1;         // coordinate sweeps per block update of eta
    bool random_scan = false;   // visit labels in random order instead of k = 1..M
    bool clustering = true;     // false: selection-only prior (no shared values)
    InitMode init = InitMode::Null;

    /// Throws ConfigError on any invalid setting.
    void validate() const;
    int n_kept() const { return (n_iter - n_burn) / thin; }
};

/// Key/value view of every ModelConfig field, in a fixed order.
std::vector<std::pair<std::string, std::string>> config_entries(const ModelConfig& config);
/// Sets one field by name; throws ConfigError for unknown keys or bad values.
void set_config_value(ModelConfig& config, const std::string& key, const std::string& value);
std::vector<std::string> config_keys();

/// Flat "key = value" file; '#' starts a comment. Fields not present keep their
/// current value in `config`.
void load_config_file(const std::filesystem::path& path, ModelConfig& config);
void write_config_file(const std::filesystem::path& path, const ModelConfig& config);

/// Current state of one chain. Label 0 is the null cluster (theta_k = 0); label
/// c > 0 means theta_k = eta[c]. Cluster ids are kept compact: 1..K.
struct ChainState {
    Eigen::VectorXd theta;  // length M+1
    std::vector<int> labels;  // length M, labels[k-1] is S_k
    std::vector<double> eta;  // eta[c-1] is the value of cluster c
    double sigma2 = 1.0;
    double alpha = 1.0;

    int order() const { return static_cast<int>(labels.size()); }
    int n_clusters() const { return static_cast<int>(eta.size()); }
    int n_null() const;
    /// Members per cluster, index c-1.
    std::vector<int> cluster_sizes() const;
    /// theta implied by (theta_0, labels, eta).
    Eigen::VectorXd reconstruct_theta() const;
    /// Throws SamplerError if labels, eta and theta disagree.
    void check_invariants() const;
};

ChainState initial_state(const ModelConfig& config, const Dataset& data, Rng& rng);

}  // namespace bnmr
