#include "bnmr/gibbs.hpp"

#include "bnmr/errors.hpp"
#include "bnmr/inference.hpp"
#include "bnmr/samplers.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numbers>
#include <numeric>

namespace bnmr {

namespace {

constexpr int kResyncInterval = 1000;

// Unnormalized log-likelihood of theta_k = t relative to theta_k = 0.
double relative_loglik(double t, double cross, double norm2, double sigma2) {
    return -(t * t * norm2 - 2.0 * t * cross) / (2.0 * sigma2);
}

void softmax(const std::vector<double>& log_w, std::vector<double>& prob) {
    prob.assign(log_w.size(), 0.0);
    double top = -kInf;
    for (double v : log_w)
        if (v > top) top = v;
    if (!std::isfinite(top)) return;
    double total = 0.0;
    for (std::size_t i = 0; i < log_w.size(); ++i) {
        prob[i] = std::exp(log_w[i] - top);
        total += prob[i];
    }
    for (double& p : prob) p /= total;
}

// Removes cluster `id` (1-based) and shifts higher ids down.
void drop_cluster(ChainState& state, int id) {
    state.eta.erase(state.eta.begin() + (id - 1));
    for (int& s : state.labels)
        if (s > id) --s;
}

}  // namespace

GibbsWorkspace::GibbsWorkspace(const BasisSet& basis, const Dataset& data) {
    if (static_cast<int>(data.size()) != basis.n()) {
        throw std::invalid_argument("basis and dataset sizes differ");
    }
    y = Eigen::Map<const Eigen::VectorXd>(data.y.data(), static_cast<Eigen::Index>(data.y.size()));
    gram = basis.lambda.transpose() * basis.lambda;
    column_norms = gram.diagonal();
    lambda_t_y = basis.lambda.transpose() * y;
    residual = y;
    log_prob_buffer.reserve(static_cast<std::size_t>(basis.order) + 2);
}

void GibbsWorkspace::resync(const BasisSet& basis, const ChainState& state) {
    residual = y - basis.lambda * state.theta;
}

NewClusterTerm new_cluster_term(double cross, double norm2, double sigma2, double mu, double phi) {
    const double phi2 = phi * phi;
    const double v = 1.0 / (1.0 / phi2 + norm2 / sigma2);
    const double m = v * (mu / phi2 + cross / sigma2);
    const double log_ratio = m * m / (2.0 * v) - mu * mu / (2.0 * phi2) + 0.5 * std::log(v / phi2) +
                             log_normal_cdf(m / std::sqrt(v)) - log_normal_cdf(mu / phi);
    return {m, v, log_ratio};
}

double new_cluster_log_likelihood(const Eigen::VectorXd& partial_residual,
                                  const Eigen::VectorXd& column, double sigma2, double mu,
                                  double phi) {
    const double n = static_cast<double>(partial_residual.size());
    const double base = -0.5 * n * std::log(2.0 * std::numbers::pi * sigma2) -
                        partial_residual.squaredNorm() / (2.0 * sigma2);
    const auto term = new_cluster_term(column.dot(partial_residual), column.squaredNorm(), sigma2, mu, phi);
    return base + term.log_ratio;
}

LabelConditional label_conditional(int k, const ChainState& state, const GibbsWorkspace& ws,
                                   const BasisSet& basis, const ModelConfig& config) {
    const int M = state.order();
    const int current = state.labels[static_cast<std::size_t>(k - 1)];
    const double t_old = state.theta(k);
    const double norm2 = ws.column_norms(k);
    // Inner product of column k with the residual that excludes theta_k.
    const double cross = basis.lambda.col(k).dot(ws.residual) + norm2 * t_old;

    auto sizes = state.cluster_sizes();
    int n0 = state.n_null();
    if (current == 0) --n0;
    else --sizes[static_cast<std::size_t>(current - 1)];
    const double others_nonnull = static_cast<double>(M - 1 - n0);

    LabelConditional lc;
    lc.new_cluster = new_cluster_term(cross, norm2, state.sigma2, config.base_mean, config.base_sd);

    lc.options.push_back(0);
    lc.log_weights.push_back(std::log(n0 + config.pi_a));

    const double log_nonnull = std::log(others_nonnull + config.pi_b);
    if (config.clustering) {
        const double log_denom = std::log(others_nonnull + state.alpha);
        for (int c = 1; c <= state.n_clusters(); ++c) {
            const int nc = sizes[static_cast<std::size_t>(c - 1)];
            if (nc == 0) continue;
            const double eta = state.eta[static_cast<std::size_t>(c - 1)];
            lc.options.push_back(c);
            lc.log_weights.push_back(log_nonnull + std::log(static_cast<double>(nc)) - log_denom +
                                     relative_loglik(eta, cross, norm2, state.sigma2));
        }
        lc.options.push_back(state.n_clusters() + 1);
        lc.log_weights.push_back(log_nonnull + std::log(state.alpha) - log_denom +
                                 lc.new_cluster.log_ratio);
    } else {
        lc.options.push_back(state.n_clusters() + 1);
        lc.log_weights.push_back(log_nonnull + lc.new_cluster.log_ratio);
    }
    softmax(lc.log_weights, lc.probabilities);
    return lc;
}

void update_label(int k, ChainState& state, GibbsWorkspace& ws, const BasisSet& basis,
                  const ModelConfig& config, Rng& rng) {
    const auto lc = label_conditional(k, state, ws, basis, config);
    if (std::all_of(lc.probabilities.begin(), lc.probabilities.end(), [](double p) { return p == 0.0; })) {
        std::cerr << "warning: label " << k << " has no finite conditional weight; keeping it\n";
        return;
    }
    const double u = sample_uniform(rng);
    std::size_t pick = 0;
    double acc = lc.probabilities[0];
    while (u > acc && pick + 1 < lc.probabilities.size()) acc += lc.probabilities[++pick];
    // Skip over zero-probability entries that the cumulative scan may land on.
    while (lc.probabilities[pick] == 0.0 && pick > 0) --pick;

    const auto kk = static_cast<std::size_t>(k - 1);
    const int current = state.labels[kk];
    const int chosen = lc.options[pick];
    const double t_old = state.theta(k);
    double t_new = 0.0;
    if (chosen == 0) {
        state.labels[kk] = 0;
    } else if (chosen <= state.n_clusters()) {
        state.labels[kk] = chosen;
        t_new = state.eta[static_cast<std::size_t>(chosen - 1)];
    } else {
        TruncatedNormalSpec spec{lc.new_cluster.mean, std::sqrt(lc.new_cluster.variance), 0.0, kInf};
        t_new = sample_truncated_normal(spec, rng);
        state.eta.push_back(t_new);
        state.labels[kk] = state.n_clusters();
    }
    if (current > 0 && current != state.labels[kk]) {
        const bool emptied = std::find(state.labels.begin(), state.labels.end(), current) == state.labels.end();
        if (emptied) drop_cluster(state, current);
    }
    if (t_new != t_old) {
        ws.residual.noalias() -= (t_new - t_old) * basis.lambda.col(k);
        state.theta(k) = t_new;
    }
}

void update_eta_block(ChainState& state, GibbsWorkspace& ws, const BasisSet& basis,
                      const ModelConfig& config, Rng& rng) {
    const int M = state.order();
    const int K = state.n_clusters();
    const int d = K + 1;
    // Block index of each theta coordinate; -1 for null coefficients.
    std::vector<int> block(static_cast<std::size_t>(M) + 1, -1);
    block[0] = 0;
    for (int k = 1; k <= M; ++k) {
        const int s = state.labels[static_cast<std::size_t>(k - 1)];
        if (s > 0) block[static_cast<std::size_t>(k)] = s;
    }
    Eigen::MatrixXd btgb = Eigen::MatrixXd::Zero(d, d);
    Eigen::VectorXd bty = Eigen::VectorXd::Zero(d);
    for (int i = 0; i <= M; ++i) {
        const int bi = block[static_cast<std::size_t>(i)];
        if (bi < 0) continue;
        bty(bi) += ws.lambda_t_y(i);
        for (int j = 0; j <= M; ++j) {
            const int bj = block[static_cast<std::size_t>(j)];
            if (bj >= 0) btgb(bi, bj) += ws.gram(i, j);
        }
    }
    const double inv_s2 = 1.0 / state.sigma2;
    Eigen::MatrixXd precision = inv_s2 * btgb;
    Eigen::VectorXd rhs = inv_s2 * bty;
    const double d0 = 1.0 / (config.intercept_sd * config.intercept_sd);
    const double dc = 1.0 / (config.base_sd * config.base_sd);
    precision(0, 0) += d0;
    for (int c = 1; c < d; ++c) {
        precision(c, c) += dc;
        rhs(c) += dc * config.base_mean;
    }
    Eigen::LLT<Eigen::MatrixXd> llt(precision);
    if (llt.info() != Eigen::Success) throw SamplerError("eta full-conditional precision is singular");
    const Eigen::VectorXd mean = llt.solve(rhs);

    Eigen::VectorXd lower(d);
    lower(0) = -kInf;
    lower.tail(K).setZero();
    Eigen::VectorXd start(d);
    start(0) = state.theta(0);
    for (int c = 1; c < d; ++c) start(c) = state.eta[static_cast<std::size_t>(c - 1)];

    const Eigen::VectorXd draw = sample_truncated_mvn(mean, precision, lower, start, rng, config.eta_sweeps);
    for (int c = 1; c < d; ++c) {
        if (!(draw(c) > 0.0)) throw SamplerError("cluster value draw violated its lower bound");
        state.eta[static_cast<std::size_t>(c - 1)] = draw(c);
    }
    const Eigen::VectorXd theta_new = [&] {
        Eigen::VectorXd t = Eigen::VectorXd::Zero(M + 1);
        t(0) = draw(0);
        for (int k = 1; k <= M; ++k) {
            const int b = block[static_cast<std::size_t>(k)];
            if (b > 0) t(k) = draw(b);
        }
        return t;
    }();
    ws.residual.noalias() -= basis.lambda * (theta_new - state.theta);
    state.theta = theta_new;
}

void update_sigma2(ChainState& state, const GibbsWorkspace& ws, const ModelConfig& config, Rng& rng) {
    const double n = static_cast<double>(ws.residual.size());
    const double precision =
        sample_gamma(config.sigma_shape + 0.5 * n, config.sigma_rate + 0.5 * ws.residual.squaredNorm(), rng);
    state.sigma2 = 1.0 / precision;
}

void update_alpha(ChainState& state, const ModelConfig& config, Rng& rng) {
    const int K = state.n_clusters();
    const int m = state.order() - state.n_null();
    if (m == 0 || K == 0) {
        state.alpha = sample_gamma(config.alpha_shape, config.alpha_rate, rng);
        return;
    }
    // Escobar & West (1995) auxiliary-variable update over the m non-zero slots.
    const double aux = sample_beta(state.alpha + 1.0, static_cast<double>(m), rng);
    const double rate = config.alpha_rate - std::log(aux);
    const double shape_hi = config.alpha_shape + K;
    const double shape_lo = config.alpha_shape + K - 1.0;
    const double odds = shape_lo / (static_cast<double>(m) * rate);
    const double w_hi = odds / (1.0 + odds);
    const bool use_hi = shape_lo <= 0.0 || sample_uniform(rng) < w_hi;
    state.alpha = sample_gamma(use_hi ? shape_hi : shape_lo, rate, rng);
}

void gibbs_sweep(ChainState& state, GibbsWorkspace& ws, const BasisSet& basis,
                 const ModelConfig& config, Rng& rng) {
    const int M = state.order();
    if (config.random_scan) {
        std::vector<int> order(static_cast<std::size_t>(M));
        std::iota(order.begin(), order.end(), 1);
        std::shuffle(order.begin(), order.end(), rng);
        for (int k : order) update_label(k, state, ws, basis, config, rng);
    } else {
        for (int k = 1; k <= M; ++k) update_label(k, state, ws, basis, config, rng);
    }
    update_eta_block(state, ws, basis, config, rng);
    update_sigma2(state, ws, config, rng);
    update_alpha(state, config, rng);
}

PosteriorSample run_chain(const ModelConfig& config, const Dataset& data, Rng& rng) {
    auto state = initial_state(config, data, rng);
    return run_chain(config, data, std::move(state), rng);
}

PosteriorSample run_chain(const ModelConfig& config, const Dataset& data, ChainState state, Rng& rng) {
    config.validate();
    data.validate();
    if (state.order() != config.order) throw ConfigError("initial state order does not match config");
    const auto basis = build_basis_set(data.x, config.order);
    GibbsWorkspace ws(basis, data);
    ws.resync(basis, state);

    const int kept = config.n_kept();
    const int M = config.order;
    PosteriorSample out;
    out.config_snapshot = config;
    out.scaling = data.scaling;
    out.draws_theta.resize(kept, M + 1);
    out.draws_labels.resize(kept, M);
    out.draws_sigma2.reserve(static_cast<std::size_t>(kept));
    out.draws_alpha.reserve(static_cast<std::size_t>(kept));
    out.draws_n0.reserve(static_cast<std::size_t>(kept));
    out.draws_K.reserve(static_cast<std::size_t>(kept));
    out.draws_loglik.reserve(static_cast<std::size_t>(kept));

    const double n = static_cast<double>(data.size());
    int row = 0;
    for (int it = 1; it <= config.n_iter && row < kept; ++it) {
        gibbs_sweep(state, ws, basis, config, rng);
        if (it % kResyncInterval == 0) {
            ws.resync(basis, state);
            state.check_invariants();
        }
        if (it > config.n_burn && (it - config.n_burn) % config.thin == 0) {
            const double ssr = ws.residual.squaredNorm();
            const double loglik = -0.5 * n * std::log(2.0 * std::numbers::pi * state.sigma2) -
                                  ssr / (2.0 * state.sigma2);
            if (!std::isfinite(loglik) || !state.theta.allFinite()) {
                throw SamplerError("non-finite state at iteration " + std::to_string(it));
            }
            out.draws_theta.row(row) = state.theta.transpose();
            for (int k = 0; k < M; ++k) out.draws_labels(row, k) = state.labels[static_cast<std::size_t>(k)];
            out.draws_sigma2.push_back(state.sigma2);
            out.draws_alpha.push_back(state.alpha);
            out.draws_n0.push_back(state.n_null());
            out.draws_K.push_back(state.n_clusters());
            out.draws_loglik.push_back(loglik);
            ++row;
        }
    }
    std::vector<double> mids;
    for (int j = 0; j < 10; ++j) mids.push_back(0.05 + 0.1 * j);
    const auto diag = chain_diagnostics(out, mids);
    for (const auto& d : diag) {
        out.mean_ess += d.ess / static_cast<double>(diag.size());
        out.mean_lag1 += d.lag1_autocorr / static_cast<double>(diag.size());
    }
    return out;
}

}  // namespace bnmr
