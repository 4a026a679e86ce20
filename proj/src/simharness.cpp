#include "bnmr/simharness.hpp"

#include "bnmr/basis.hpp"
#include "bnmr/errors.hpp"
#include "bnmr/gibbs.hpp"
#include "bnmr/inference.hpp"
#include "bnmr/samplers.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <thread>

namespace bnmr {

namespace {

constexpr std::size_t kEvalGridPoints = 100;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool covers(double truth, double lower, double upper) {
    const double tol = 1e-9 * (1.0 + std::abs(truth));
    return truth >= lower - tol && truth <= upper + tol;
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

}  // namespace

std::string to_string(ScenarioName name) {
    switch (name) {
        case ScenarioName::Flat: return "flat";
        case ScenarioName::Linear: return "linear";
        case ScenarioName::Wavy: return "wavy";
        case ScenarioName::FlatNonlinear: return "flat_nonlinear";
    }
    return "unknown";
}

ScenarioName parse_scenario(const std::string& text) {
    if (text == "flat") return ScenarioName::Flat;
    if (text == "linear") return ScenarioName::Linear;
    if (text == "wavy") return ScenarioName::Wavy;
    if (text == "flat_nonlinear" || text == "flat-nonlinear") return ScenarioName::FlatNonlinear;
    throw std::invalid_argument("unknown scenario '" + text +
                                "' (expected flat, linear, wavy or flat_nonlinear)");
}

void Scenario::validate() const {
    if (n < 10) throw std::invalid_argument("scenario sample size must be >= 10");
    if (!(noise_sd > 0.0)) throw std::invalid_argument("scenario noise sd must be positive");
}

double scenario_truth(ScenarioName name, double x) {
    if (!(x >= 0.0 && x <= 1.0)) throw std::domain_error("scenario x must lie in [0,1]");
    switch (name) {
        case ScenarioName::Flat: return 0.0;
        case ScenarioName::Linear: return x;
        case ScenarioName::Wavy: return std::sin(3.0 * std::numbers::pi * x) / (3.0 * std::numbers::pi) + x;
        case ScenarioName::FlatNonlinear: {
            if (x < 0.5) return 0.0;
            const double u = 2.0 * (x - 0.5);
            return u * u;
        }
    }
    throw std::invalid_argument("unknown scenario");
}

double scenario_truth_derivative(ScenarioName name, double x) {
    if (!(x >= 0.0 && x <= 1.0)) throw std::domain_error("scenario x must lie in [0,1]");
    switch (name) {
        case ScenarioName::Flat: return 0.0;
        case ScenarioName::Linear: return 1.0;
        case ScenarioName::Wavy: return std::cos(3.0 * std::numbers::pi * x) + 1.0;
        case ScenarioName::FlatNonlinear: return x < 0.5 ? 0.0 : 8.0 * (x - 0.5);
    }
    throw std::invalid_argument("unknown scenario");
}

Dataset generate_dataset(const Scenario& scenario, Rng& rng) {
    scenario.validate();
    RawSeries raw;
    raw.time.resize(static_cast<std::size_t>(scenario.n));
    for (double& x : raw.time) x = sample_uniform(rng);
    std::sort(raw.time.begin(), raw.time.end());
    raw.value.reserve(raw.time.size());
    for (double x : raw.time) {
        raw.value.push_back(scenario_truth(scenario.name, x) + scenario.noise_sd * sample_standard_normal(rng));
    }
    StandardizeOptions opts;
    opts.x_lower = 0.0;
    opts.x_upper = 1.0;
    return standardize(raw, opts);
}

MetricsReport evaluate_fit(const PosteriorSample& sample, const Scenario& scenario) {
    const auto grid = unit_grid(kEvalGridPoints);
    const auto curve = posterior_curve(sample, grid);
    const auto deriv = posterior_derivative(sample, grid);
    MetricsReport r;
    double se_f = 0.0, se_d = 0.0;
    std::size_t cov_f = 0, cov_d = 0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double x = curve.grid[i];
        const double tf = scenario_truth(scenario.name, x);
        const double td = scenario_truth_derivative(scenario.name, x);
        se_f += (curve.mean[i] - tf) * (curve.mean[i] - tf);
        se_d += (deriv.mean[i] - td) * (deriv.mean[i] - td);
        if (covers(tf, curve.lower[i], curve.upper[i])) ++cov_f;
        if (covers(td, deriv.lower[i], deriv.upper[i])) ++cov_d;
    }
    const double n = static_cast<double>(grid.size());
    r.rmse_f = std::sqrt(se_f / n);
    r.rmse_deriv = std::sqrt(se_d / n);
    r.coverage_f = static_cast<double>(cov_f) / n;
    r.coverage_deriv = static_cast<double>(cov_d) / n;
    const auto probs = model_probabilities(sample);
    r.prob_flat = probs.prob_flat;
    r.prob_linear = probs.prob_linear;
    const int M = sample.order();
    for (std::size_t i = 0; i < sample.size(); ++i) {
        r.n_nonzero_mean += M - sample.draws_n0[i];
        r.n_unique_mean += sample.draws_K[i];
    }
    r.n_nonzero_mean /= static_cast<double>(sample.size());
    r.n_unique_mean /= static_cast<double>(sample.size());
    return r;
}

CvResult kfold_cv(const Dataset& data, const ModelConfig& config, int k, Rng& rng) {
    if (k < 2) throw DataError("cross-validation needs at least 2 folds");
    const std::size_t n = data.size();
    if (n < static_cast<std::size_t>(k)) {
        throw DataError("cannot split " + std::to_string(n) + " observations into " + std::to_string(k) + " folds");
    }
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<int> fold_of(n);
    for (std::size_t i = 0; i < n; ++i) fold_of[perm[i]] = static_cast<int>(i % static_cast<std::size_t>(k));

    CvResult out;
    double total_se = 0.0;
    for (int f = 0; f < k; ++f) {
        std::vector<std::size_t> train, test;
        for (std::size_t i = 0; i < n; ++i) (fold_of[i] == f ? test : train).push_back(i);
        const Dataset train_data = subset(data, train);
        if (train_data.size() < 3) throw DataError("training fold has fewer than 3 observations");
        const auto sample = run_chain(config, train_data, rng);
        const Eigen::VectorXd theta_mean = sample.draws_theta.colwise().mean().transpose();
        std::vector<double> x_test;
        for (auto i : test) x_test.push_back(data.x[i]);
        const auto basis = build_basis_set(x_test, config.order);
        const Eigen::VectorXd pred = evaluate_f(basis, theta_mean);
        double fold_se = 0.0;
        for (std::size_t j = 0; j < test.size(); ++j) {
            const double err = data.scaling.y_sd * (pred(static_cast<Eigen::Index>(j)) - data.y[test[j]]);
            fold_se += err * err;
        }
        total_se += fold_se;
        out.fold_rmse.push_back(std::sqrt(fold_se / static_cast<double>(test.size())));
    }
    out.rmse = std::sqrt(total_se / static_cast<double>(n));
    out.rmse_standardized = out.rmse / data.scaling.y_sd;
    return out;
}

OlsResult ols_fit(const Dataset& data, std::optional<ScenarioName> truth) {
    const std::size_t n = data.size();
    if (n < 3) throw DataError("OLS needs at least 3 observations");
    const auto raw = destandardize(data);
    const double xm = std::accumulate(raw.time.begin(), raw.time.end(), 0.0) / static_cast<double>(n);
    const double ym = std::accumulate(raw.value.begin(), raw.value.end(), 0.0) / static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (raw.time[i] - xm) * (raw.time[i] - xm);
        sxy += (raw.time[i] - xm) * (raw.value[i] - ym);
    }
    if (!(sxx > 0.0)) throw DataError("OLS: x has no spread");
    OlsResult r;
    r.slope = sxy / sxx;
    r.intercept = ym - r.slope * xm;
    double ssr = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double e = raw.value[i] - (r.intercept + r.slope * raw.time[i]);
        ssr += e * e;
    }
    const double dof = static_cast<double>(n) - 2.0;
    const double se = std::sqrt(ssr / dof / sxx);
    if (se > 0.0) {
        boost::math::students_t_distribution<double> tdist(dof);
        r.p_value = 2.0 * boost::math::cdf(boost::math::complement(tdist, std::abs(r.slope / se)));
    } else {
        r.p_value = r.slope != 0.0 ? 0.0 : 1.0;
    }
    r.rmse_on_grid = kNaN;
    r.rmse_deriv_on_grid = kNaN;
    if (truth) {
        const auto grid = unit_grid(kEvalGridPoints);
        double se_f = 0.0, se_d = 0.0;
        for (double u : grid) {
            const double x = data.scaling.to_original_x(u);
            const double ef = r.intercept + r.slope * x - scenario_truth(*truth, x);
            const double ed = r.slope - scenario_truth_derivative(*truth, x);
            se_f += ef * ef;
            se_d += ed * ed;
        }
        r.rmse_on_grid = std::sqrt(se_f / static_cast<double>(grid.size()));
        r.rmse_deriv_on_grid = std::sqrt(se_d / static_cast<double>(grid.size()));
    }
    return r;
}

std::vector<ReplicateResult> run_simulation(const SimulationOptions& options) {
    options.scenario.validate();
    options.config.validate();
    if (options.replicates < 1) throw std::invalid_argument("replicates must be >= 1");
    const int total = options.replicates;
    std::vector<ReplicateResult> results(static_cast<std::size_t>(total));
    std::atomic<int> next{0};
    std::atomic<int> done{0};
    std::mutex error_mutex;
    std::mutex progress_mutex;
    std::exception_ptr error;

    auto worker = [&] {
        for (;;) {
            const int r = next.fetch_add(1);
            if (r >= total) return;
            try {
                auto rng = make_rng(options.seed, static_cast<std::uint64_t>(r));
                const Dataset data = generate_dataset(options.scenario, rng);
                const auto sample = run_chain(options.config, data, rng);
                ReplicateResult res;
                res.replicate = r;
                res.bnmr = evaluate_fit(sample, options.scenario);
                res.ols = ols_fit(data, options.scenario.name);
                res.mean_ess = sample.mean_ess;
                results[static_cast<std::size_t>(r)] = res;
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
                next = total;
                return;
            }
            const int d = ++done;
            if (options.progress) {
                std::lock_guard lock(progress_mutex);
                options.progress(d, total);
            }
        }
    };
    const int jobs = std::clamp(options.jobs, 1, total);
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
    }
    if (error) std::rethrow_exception(error);
    return results;
}

MeanSe mean_and_se(const std::vector<double>& values) {
    MeanSe out;
    if (values.empty()) return out;
    const double n = static_cast<double>(values.size());
    out.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - out.mean) * (v - out.mean);
        out.se = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
    }
    return out;
}

void write_simulation_csv(const std::filesystem::path& path, const Scenario& scenario,
                          const std::vector<ReplicateResult>& results) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    out << "scenario,n,replicate,rmse_f_x100,coverage,prob_flat,prob_linear,rmse_deriv_x100,"
           "coverage_deriv,n_nonzero_mean,n_unique_mean,ols_rmse_f_x100,ols_p_value,"
           "ols_rmse_deriv_x100,mean_ess\n";
    for (const auto& r : results) {
        out << to_string(scenario.name) << ',' << scenario.n << ',' << r.replicate << ','
            << fmt(100.0 * r.bnmr.rmse_f) << ',' << fmt(r.bnmr.coverage_f) << ','
            << fmt(r.bnmr.prob_flat) << ',' << fmt(r.bnmr.prob_linear) << ','
            << fmt(100.0 * r.bnmr.rmse_deriv) << ',' << fmt(r.bnmr.coverage_deriv) << ','
            << fmt(r.bnmr.n_nonzero_mean) << ',' << fmt(r.bnmr.n_unique_mean) << ','
            << fmt(100.0 * r.ols.rmse_on_grid) << ',' << fmt(r.ols.p_value) << ','
            << fmt(100.0 * r.ols.rmse_deriv_on_grid) << ',' << fmt(r.mean_ess) << '\n';
    }
}

void write_simulation_summary_csv(const std::filesystem::path& path, const Scenario& scenario,
                                  const std::vector<ReplicateResult>& results) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    struct Column {
        const char* name;
        double (*get)(const ReplicateResult&);
    };
    const Column columns[] = {
        {"rmse_f_x100", [](const ReplicateResult& r) { return 100.0 * r.bnmr.rmse_f; }},
        {"coverage", [](const ReplicateResult& r) { return r.bnmr.coverage_f; }},
        {"prob_flat", [](const ReplicateResult& r) { return r.bnmr.prob_flat; }},
        {"prob_linear", [](const ReplicateResult& r) { return r.bnmr.prob_linear; }},
        {"rmse_deriv_x100", [](const ReplicateResult& r) { return 100.0 * r.bnmr.rmse_deriv; }},
        {"coverage_deriv", [](const ReplicateResult& r) { return r.bnmr.coverage_deriv; }},
        {"n_nonzero_mean", [](const ReplicateResult& r) { return r.bnmr.n_nonzero_mean; }},
        {"n_unique_mean", [](const ReplicateResult& r) { return r.bnmr.n_unique_mean; }},
        {"ols_rmse_f_x100", [](const ReplicateResult& r) { return 100.0 * r.ols.rmse_on_grid; }},
        {"ols_p_value", [](const ReplicateResult& r) { return r.ols.p_value; }},
    };
    out << "scenario,n,replicates";
    for (const auto& c : columns) out << ',' << c.name << ',' << c.name << "_se";
    out << '\n' << to_string(scenario.name) << ',' << scenario.n << ',' << results.size();
    for (const auto& c : columns) {
        std::vector<double> v;
        for (const auto& r : results) v.push_back(c.get(r));
        const auto ms = mean_and_se(v);
        out << ',' << fmt(ms.mean) << ',' << fmt(ms.se);
    }
    out << '\n';
}

}  // namespace bnmr
