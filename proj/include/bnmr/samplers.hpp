#pragma once

#include "bnmr/rng.hpp"

#include <Eigen/Dense>

#include <limits>

namespace bnmr {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Normal(mean, sd^2) restricted to (lower, upper). Either bound may be infinite.
struct TruncatedNormalSpec {
    double mean = 0.0;
    double sd = 1.0;
    double lower = -kInf;
    double upper = kInf;

    void validate() const;
};

struct TruncatedMoments {
    double mean;
    double variance;
    double log_normalizer;  // log P(lower < Z < upper) for Z ~ N(mean, sd^2)
};

// Standard normal helpers, all stable deep into both tails.
double log_normal_pdf(double z);
double log_normal_cdf(double z);
/// log(Phi(b) - Phi(a)) for a < b.
double log_normal_interval(double a, double b);

double sample_truncated_normal(const TruncatedNormalSpec& spec, Rng& rng);

TruncatedMoments truncated_normal_moments(const TruncatedNormalSpec& spec);

/// One approximate draw from N(mean, precision^{-1}) restricted to x_j > lower_bounds_j,
/// produced by `sweeps` coordinate Gibbs passes starting at `start` (projected onto the
/// feasible set if needed). Throws SamplerError if the precision is not positive definite.
Eigen::VectorXd sample_truncated_mvn(const Eigen::VectorXd& mean, const Eigen::MatrixXd& precision,
                                     const Eigen::VectorXd& lower_bounds,
                                     const Eigen::VectorXd& start, Rng& rng, int sweeps = 1);

/// Gamma with the given shape and rate (mean shape/rate).
double sample_gamma(double shape, double rate, Rng& rng);

double sample_beta(double a, double b, Rng& rng);

double sample_standard_normal(Rng& rng);

/// Uniform on the open interval (0, 1).
double sample_uniform(Rng& rng);

}  // namespace bnmr
