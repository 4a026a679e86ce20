#pragma once

#include "bnmr/basis.hpp"
#include "bnmr/posterior.hpp"

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace bnmr {

/// Pointwise posterior mean and central 95% interval on a grid.
struct CurveSummary {
    std::vector<double> grid;  // original x units
    std::vector<double> mean;
    std::vector<double> lower;  // 2.5% quantile
    std::vector<double> upper;  // 97.5% quantile
    std::string units;          // free-text unit note written as a CSV comment

    std::size_t size() const { return grid.size(); }
};

/// Linear-interpolation empirical quantile (R type 7) of an unsorted sample.
double quantile(std::vector<double> values, double prob);

/// Summarizes rows of `draws` (n_draws x n_points) column-wise.
CurveSummary summarize_draws(const Eigen::MatrixXd& draws, std::vector<double> grid);

/// f on a unit-interval grid, mapped back to original x and y units.
CurveSummary posterior_curve(const PosteriorSample& sample, std::span<const double> grid);

/// f' in original units (chain rule factor y_sd / x_range).
CurveSummary posterior_derivative(const PosteriorSample& sample, std::span<const double> grid);

/// Derivative of one draw rescaled so its integral over [0,1] equals
/// filter_mass / flow_rate. Requires sum_{k>=1} theta_k > 0.
Eigen::VectorXd scaled_derivative_draw(const BasisSet& basis, const Eigen::VectorXd& theta,
                                       double filter_mass, double flow_rate);

struct ConcentrationSummary {
    CurveSummary curve;  // grid in original time units (minutes), values in ug/m^3
    std::size_t flat_draws_excluded = 0;
    std::size_t draws_used = 0;
};

/// Time-resolved concentration from the mass-scaled derivative. filter_mass in
/// micrograms, flow_rate in litres per minute; time is in minutes. Flat draws are
/// excluded and counted. Throws std::domain_error if every draw is flat.
ConcentrationSummary scaled_derivative(const PosteriorSample& sample, std::span<const double> grid,
                                       double filter_mass, double flow_rate);

struct ModelProbabilities {
    double prob_flat;    // all increments zero
    double prob_linear;  // no zero increments and a single shared value
};

ModelProbabilities model_probabilities(const PosteriorSample& sample);

struct ChainDiagnostic {
    double point;
    double ess;
    double lag1_autocorr;
};

/// Autocorrelation at `lag` (biased estimator, normalized by lag-0).
double autocorrelation(std::span<const double> series, std::size_t lag);

/// Effective sample size with Geyer's initial positive sequence: pairs of
/// autocorrelations are summed until the first negative pair.
double effective_sample_size(std::span<const double> series);

std::vector<ChainDiagnostic> chain_diagnostics(const PosteriorSample& sample, std::span<const double> grid);

/// Evenly spaced points covering [0,1] inclusive.
std::vector<double> unit_grid(std::size_t n_points);

/// CSV with columns x, mean, lower95, upper95 and a leading "# units:" comment line.
void write_curve_csv(const std::filesystem::path& path, const CurveSummary& curve);

}  // namespace bnmr
