#pragma once

#include "bnmr/basis.hpp"
#include "bnmr/data_pipeline.hpp"
#include "bnmr/model.hpp"
#include "bnmr/posterior.hpp"
#include "bnmr/rng.hpp"

#include <Eigen/Dense>

#include <vector>

namespace bnmr {

/// Quantities reused across sweeps. `residual` tracks y - lambda * theta.
struct GibbsWorkspace {
    Eigen::VectorXd y;
    Eigen::VectorXd residual;
    Eigen::VectorXd column_norms;  // sum_i lambda_ik^2
    Eigen::MatrixXd gram;          // lambda^T lambda
    Eigen::VectorXd lambda_t_y;    // lambda^T y
    std::vector<double> log_prob_buffer;

    GibbsWorkspace(const BasisSet& basis, const Dataset& data);
    /// Recomputes the residual from scratch.
    void resync(const BasisSet& basis, const ChainState& state);
};

/// Posterior of a coefficient that opens a new cluster, together with the log of
///   int_0^inf prod_i N(y_i; r_i + lambda_ik t, sigma2) TN(t; mu, phi^2) dt
///   - sum_i log N(y_i; r_i, sigma2)
/// where cross = sum_i lambda_ik * r_i and norm2 = sum_i lambda_ik^2.
struct NewClusterTerm {
    double mean;      // m~
    double variance;  // v~
    double log_ratio;
};

NewClusterTerm new_cluster_term(double cross, double norm2, double sigma2, double mu, double phi);

/// Full log of the new-cluster likelihood integral given the partial residual
/// y - lambda_[k] theta_[k] and column lambda_k.
double new_cluster_log_likelihood(const Eigen::VectorXd& partial_residual,
                                  const Eigen::VectorXd& column, double sigma2, double mu,
                                  double phi);

/// Categorical full conditional of S_k. `options` holds the label each entry would
/// assign before compaction: 0 for the null cluster, existing ids, and
/// n_clusters + 1 for a new cluster (always last).
struct LabelConditional {
    std::vector<int> options;
    std::vector<double> log_weights;  // unnormalized
    std::vector<double> probabilities;
    NewClusterTerm new_cluster;
};

LabelConditional label_conditional(int k, const ChainState& state, const GibbsWorkspace& ws,
                                   const BasisSet& basis, const ModelConfig& config);

// Individual Gibbs updates. Each keeps theta, labels, eta and ws.residual coherent.
void update_label(int k, ChainState& state, GibbsWorkspace& ws, const BasisSet& basis,
                  const ModelConfig& config, Rng& rng);
void update_eta_block(ChainState& state, GibbsWorkspace& ws, const BasisSet& basis,
                      const ModelConfig& config, Rng& rng);
void update_sigma2(ChainState& state, const GibbsWorkspace& ws, const ModelConfig& config, Rng& rng);
void update_alpha(ChainState& state, const ModelConfig& config, Rng& rng);

/// Labels (k = 1..M, or random order), eta block, sigma2, alpha.
void gibbs_sweep(ChainState& state, GibbsWorkspace& ws, const BasisSet& basis,
                 const ModelConfig& config, Rng& rng);

/// Runs n_iter sweeps, keeping every thin-th state after n_burn.
PosteriorSample run_chain(const ModelConfig& config, const Dataset& data, Rng& rng);

/// Same, from a caller-supplied starting state.
PosteriorSample run_chain(const ModelConfig& config, const Dataset& data, ChainState state, Rng& rng);

}  // namespace bnmr
