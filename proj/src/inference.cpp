#include "bnmr/inference.hpp"

#include "bnmr/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace bnmr {

namespace {

void require_draws(const PosteriorSample& sample) {
    if (sample.empty()) throw std::invalid_argument("posterior sample is empty");
}

void check_grid(std::span<const double> grid) {
    for (double g : grid) {
        if (!(g >= 0.0 && g <= 1.0)) throw std::domain_error("grid points must lie in [0,1]");
    }
}

std::vector<double> original_grid(const PosteriorSample& sample, std::span<const double> grid) {
    std::vector<double> out;
    out.reserve(grid.size());
    for (double g : grid) out.push_back(sample.scaling.to_original_x(g));
    return out;
}

}  // namespace

double quantile(std::vector<double> values, double prob) {
    if (values.empty()) throw std::invalid_argument("quantile of empty sample");
    std::sort(values.begin(), values.end());
    const double h = (static_cast<double>(values.size()) - 1.0) * prob;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

CurveSummary summarize_draws(const Eigen::MatrixXd& draws, std::vector<double> grid) {
    if (draws.rows() == 0) throw std::invalid_argument("no draws to summarize");
    CurveSummary s;
    s.grid = std::move(grid);
    const auto n_pts = static_cast<std::size_t>(draws.cols());
    s.mean.resize(n_pts);
    s.lower.resize(n_pts);
    s.upper.resize(n_pts);
    std::vector<double> column(static_cast<std::size_t>(draws.rows()));
    for (std::size_t j = 0; j < n_pts; ++j) {
        for (Eigen::Index i = 0; i < draws.rows(); ++i) column[static_cast<std::size_t>(i)] = draws(i, static_cast<Eigen::Index>(j));
        const double m = std::accumulate(column.begin(), column.end(), 0.0) / static_cast<double>(column.size());
        double lo = quantile(column, 0.025);
        double hi = quantile(column, 0.975);
        // Bands always contain the mean, even for strongly skewed marginals.
        s.mean[j] = m;
        s.lower[j] = std::min(lo, m);
        s.upper[j] = std::max(hi, m);
    }
    return s;
}

CurveSummary posterior_curve(const PosteriorSample& sample, std::span<const double> grid) {
    require_draws(sample);
    check_grid(grid);
    const auto basis = build_basis_set(grid, sample.order());
    Eigen::MatrixXd f = sample.draws_theta * basis.lambda.transpose();
    f = (f.array() * sample.scaling.y_sd + sample.scaling.y_mean).matrix();
    auto s = summarize_draws(f, original_grid(sample, grid));
    s.units = "outcome units";
    return s;
}

CurveSummary posterior_derivative(const PosteriorSample& sample, std::span<const double> grid) {
    require_draws(sample);
    check_grid(grid);
    const int M = sample.order();
    const auto basis = build_basis_set(grid, M);
    Eigen::MatrixXd d = sample.draws_theta.rightCols(M) * basis.dpsi.transpose();
    d *= sample.scaling.y_sd / sample.scaling.x_range();
    auto s = summarize_draws(d, original_grid(sample, grid));
    s.units = "outcome units per time unit";
    return s;
}

Eigen::VectorXd scaled_derivative_draw(const BasisSet& basis, const Eigen::VectorXd& theta,
                                       double filter_mass, double flow_rate) {
    const double total = theta.tail(basis.order).sum();
    if (!(total > 0.0)) throw std::domain_error("cannot scale a flat draw");
    return evaluate_derivative(basis, theta) * (filter_mass / (flow_rate * total));
}

ConcentrationSummary scaled_derivative(const PosteriorSample& sample, std::span<const double> grid,
                                       double filter_mass, double flow_rate) {
    require_draws(sample);
    check_grid(grid);
    if (!(filter_mass > 0.0)) throw std::domain_error("filter mass must be positive");
    if (!(flow_rate > 0.0)) throw std::domain_error("flow rate must be positive");
    const int M = sample.order();
    const auto basis = build_basis_set(grid, M);
    // ug / (L/min) over the fitted span in minutes gives ug/L; x1000 for ug/m^3.
    const double to_concentration = 1000.0 / sample.scaling.x_range();

    std::vector<Eigen::Index> usable;
    for (Eigen::Index i = 0; i < sample.draws_theta.rows(); ++i) {
        if (sample.draws_theta.row(i).tail(M).sum() > 0.0) usable.push_back(i);
    }
    ConcentrationSummary out;
    out.flat_draws_excluded = sample.size() - usable.size();
    out.draws_used = usable.size();
    if (usable.empty()) throw std::domain_error("cannot scale a flat posterior: every draw is flat");

    Eigen::MatrixXd conc(static_cast<Eigen::Index>(usable.size()), static_cast<Eigen::Index>(grid.size()));
    for (std::size_t r = 0; r < usable.size(); ++r) {
        const Eigen::VectorXd theta = sample.draws_theta.row(usable[r]).transpose();
        conc.row(static_cast<Eigen::Index>(r)) =
            (scaled_derivative_draw(basis, theta, filter_mass, flow_rate) * to_concentration).transpose();
    }
    out.curve = summarize_draws(conc, original_grid(sample, grid));
    out.curve.units = "ug/m^3; x in minutes";
    return out;
}

ModelProbabilities model_probabilities(const PosteriorSample& sample) {
    require_draws(sample);
    const int M = sample.order();
    std::size_t flat = 0;
    std::size_t linear = 0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        if (sample.draws_n0[i] == M) ++flat;
        if (sample.draws_n0[i] == 0 && sample.draws_K[i] == 1) ++linear;
    }
    const double n = static_cast<double>(sample.size());
    return {static_cast<double>(flat) / n, static_cast<double>(linear) / n};
}

double autocorrelation(std::span<const double> series, std::size_t lag) {
    const std::size_t n = series.size();
    if (n < 2 || lag >= n) return 0.0;
    const double m = std::accumulate(series.begin(), series.end(), 0.0) / static_cast<double>(n);
    double c0 = 0.0;
    for (double v : series) c0 += (v - m) * (v - m);
    if (c0 <= 0.0) return 0.0;
    double ck = 0.0;
    for (std::size_t t = 0; t + lag < n; ++t) ck += (series[t] - m) * (series[t + lag] - m);
    return ck / c0;
}

double effective_sample_size(std::span<const double> series) {
    const std::size_t n = series.size();
    if (n < 4) return static_cast<double>(n);
    const double m = std::accumulate(series.begin(), series.end(), 0.0) / static_cast<double>(n);
    std::vector<double> centered(n);
    double c0 = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
        centered[t] = series[t] - m;
        c0 += centered[t] * centered[t];
    }
    // A constant series carries no autocorrelation information.
    if (c0 <= 0.0) return static_cast<double>(n);
    const auto rho = [&](std::size_t lag) {
        double s = 0.0;
        for (std::size_t t = 0; t + lag < n; ++t) s += centered[t] * centered[t + lag];
        return s / c0;
    };
    double tau = -1.0;
    for (std::size_t k = 0; 2 * k + 1 < n; ++k) {
        const double pair = rho(2 * k) + rho(2 * k + 1);
        if (pair < 0.0) break;
        tau += 2.0 * pair;
    }
    tau = std::max(tau, 1.0 / static_cast<double>(n));
    return static_cast<double>(n) / tau;
}

std::vector<ChainDiagnostic> chain_diagnostics(const PosteriorSample& sample, std::span<const double> grid) {
    check_grid(grid);
    std::vector<ChainDiagnostic> out;
    if (sample.empty()) return out;
    const auto basis = build_basis_set(grid, sample.order());
    const Eigen::MatrixXd f = sample.draws_theta * basis.lambda.transpose();
    std::vector<double> series(sample.size());
    for (std::size_t j = 0; j < grid.size(); ++j) {
        for (std::size_t i = 0; i < sample.size(); ++i)
            series[i] = f(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        out.push_back({sample.scaling.to_original_x(grid[j]), effective_sample_size(series),
                       autocorrelation(series, 1)});
    }
    return out;
}

std::vector<double> unit_grid(std::size_t n_points) {
    if (n_points < 2) throw std::invalid_argument("grid needs at least 2 points");
    std::vector<double> g(n_points);
    for (std::size_t i = 0; i < n_points; ++i) g[i] = static_cast<double>(i) / static_cast<double>(n_points - 1);
    g.back() = 1.0;
    return g;
}

void write_curve_csv(const std::filesystem::path& path, const CurveSummary& curve) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    out << "# units: " << (curve.units.empty() ? "unspecified" : curve.units) << '\n';
    out << "x,mean,lower95,upper95\n";
    char buf[128];
    for (std::size_t i = 0; i < curve.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.10g,%.10g,%.10g,%.10g\n", curve.grid[i], curve.mean[i],
                      curve.lower[i], curve.upper[i]);
        out << buf;
    }
}

}  // namespace bnmr
