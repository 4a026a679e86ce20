#pragma once

#include "bnmr/data_pipeline.hpp"
#include "bnmr/model.hpp"
#include "bnmr/posterior.hpp"
#include "bnmr/rng.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace bnmr {

enum class ScenarioName { Flat, Linear, Wavy, FlatNonlinear };

std::string to_string(ScenarioName name);
/// Accepts flat, linear, wavy, flat_nonlinear. Throws std::invalid_argument otherwise.
ScenarioName parse_scenario(const std::string& text);

struct Scenario {
    ScenarioName name = ScenarioName::Flat;
    int n = 100;
    double noise_sd = 0.25;

    void validate() const;
};

double scenario_truth(ScenarioName name, double x);
double scenario_truth_derivative(ScenarioName name, double x);

/// x ~ Unif(0,1) sorted, y = truth + N(0, noise_sd^2), standardized with x domain [0,1].
Dataset generate_dataset(const Scenario& scenario, Rng& rng);

struct MetricsReport {
    double rmse_f = 0.0;
    double rmse_deriv = 0.0;
    double coverage_f = 0.0;
    double coverage_deriv = 0.0;
    double prob_flat = 0.0;
    double prob_linear = 0.0;
    double n_nonzero_mean = 0.0;
    double n_unique_mean = 0.0;
};

/// Compares the posterior to the scenario truth on 100 evenly spaced points.
MetricsReport evaluate_fit(const PosteriorSample& sample, const Scenario& scenario);

struct CvResult {
    double rmse = 0.0;               // pooled, original outcome units
    double rmse_standardized = 0.0;  // rmse / y_sd
    std::vector<double> fold_rmse;
};

/// Random k-fold split; each fold is predicted by the posterior-mean curve fitted
/// on the other folds. Throws DataError if k < 2 or n < k.
CvResult kfold_cv(const Dataset& data, const ModelConfig& config, int k, Rng& rng);

struct OlsResult {
    double slope = 0.0;
    double intercept = 0.0;
    double p_value = 1.0;  // two-sided t-test of zero slope
    double rmse_on_grid = 0.0;
    double rmse_deriv_on_grid = 0.0;
};

/// Least-squares line in original units. Grid RMSEs are filled only when `truth`
/// is given (NaN otherwise).
OlsResult ols_fit(const Dataset& data, std::optional<ScenarioName> truth = std::nullopt);

struct ReplicateResult {
    int replicate = 0;
    MetricsReport bnmr;
    OlsResult ols;
    double mean_ess = 0.0;
};

struct SimulationOptions {
    Scenario scenario;
    int replicates = 50;
    int jobs = 1;
    std::uint64_t seed = 1;
    ModelConfig config;
    std::function<void(int done, int total)> progress;
};

/// Replicate r draws its data and chain from stream (seed, r), so results do not
/// depend on `jobs`.
std::vector<ReplicateResult> run_simulation(const SimulationOptions& options);

struct MeanSe {
    double mean = 0.0;
    double se = 0.0;
};

MeanSe mean_and_se(const std::vector<double>& values);

void write_simulation_csv(const std::filesystem::path& path, const Scenario& scenario,
                          const std::vector<ReplicateResult>& results);
void write_simulation_summary_csv(const std::filesystem::path& path, const Scenario& scenario,
                                  const std::vector<ReplicateResult>& results);

}  // namespace bnmr
