#pragma once

#include "bnmr/data_pipeline.hpp"
#include "bnmr/model.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <vector>

namespace bnmr {

/// Retained draws of one chain after burn-in and thinning. Theta is on the
/// standardized scale; `scaling` maps back to original units.
struct PosteriorSample {
    Eigen::MatrixXd draws_theta;  // n_kept x (M+1)
    Eigen::MatrixXi draws_labels; // n_kept x M
    std::vector<double> draws_sigma2;
    std::vector<double> draws_alpha;
    std::vector<int> draws_n0;  // coefficients in the null cluster
    std::vector<int> draws_K;   // distinct non-zero values
    std::vector<double> draws_loglik;
    ModelConfig config_snapshot;
    ScalingInfo scaling;
    // Chain quality of f at the midpoints of ten equal cells of [0,1].
    double mean_ess = 0.0;
    double mean_lag1 = 0.0;

    std::size_t size() const { return static_cast<std::size_t>(draws_theta.rows()); }
    int order() const { return static_cast<int>(draws_theta.cols()) - 1; }
    bool empty() const { return draws_theta.rows() == 0; }
};

}  // namespace bnmr
