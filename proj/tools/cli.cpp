#include "cli.hpp"

#include "bnmr/data_pipeline.hpp"
#include "bnmr/errors.hpp"
#include "bnmr/gibbs.hpp"
#include "bnmr/inference.hpp"
#include "bnmr/model.hpp"
#include "bnmr/simharness.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>

namespace fs = std::filesystem;

namespace bnmr::cli {

namespace {

struct DataOptions {
    std::string input;
    std::string time_column = "time";
    std::string value_column = "pressure_drop";
    double trim_start = 30.0;
    double trim_end = 5.0;
    std::string metadata;
    std::size_t grid_points = 100;
};

struct CommonOptions {
    std::string output;
    std::string config_file;
    std::map<std::string, std::string> overrides;
    std::optional<std::uint64_t> seed;
};

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

void add_common(CLI::App& cmd, CommonOptions& common) {
    cmd.add_option("-o,--output", common.output, "Output directory")->required();
    cmd.add_option("--config", common.config_file, "Key = value config file");
    cmd.add_option("--seed", common.seed, "RNG seed (overrides config)");
    for (const auto& key : config_keys()) {
        if (key == "seed") continue;
        std::string names = "--" + key;
        std::string dashed = key;
        std::replace(dashed.begin(), dashed.end(), '_', '-');
        if (dashed != key) names += ",--" + dashed;
        cmd.add_option_function<std::string>(
            names, [&common, key](const std::string& v) { common.overrides[key] = v; },
            "Model setting '" + key + "'");
    }
}

void add_data(CLI::App& cmd, DataOptions& data) {
    cmd.add_option("-i,--input", data.input, "Input CSV with a header row")->required();
    cmd.add_option("--time-column", data.time_column, "Time column (numeric minutes or ISO-8601)");
    cmd.add_option("--value-column", data.value_column, "Outcome column");
    cmd.add_option("--trim-start", data.trim_start, "Minutes removed from the start")->check(CLI::NonNegativeNumber);
    cmd.add_option("--trim-end", data.trim_end, "Minutes removed from the end")->check(CLI::NonNegativeNumber);
    cmd.add_option("--metadata", data.metadata, "Sidecar key = value file (filter_mass_ug, flow_rate_lpm, sample_id)");
    cmd.add_option("--grid-points", data.grid_points, "Points in the output grid")->check(CLI::Range(2, 1000000));
}

// defaults < config file < flags
ModelConfig resolve_config(const CommonOptions& common) {
    ModelConfig config;
    if (!common.config_file.empty()) load_config_file(common.config_file, config);
    for (const auto& [k, v] : common.overrides) set_config_value(config, k, v);
    if (common.seed) config.seed = *common.seed;
    config.validate();
    return config;
}

fs::path prepare_output(const std::string& dir) {
    fs::path out(dir);
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec || !fs::is_directory(out)) throw DataError("cannot create output directory '" + dir + "'");
    return out;
}

void write_manifest(const fs::path& dir, const std::string& command, const ModelConfig& config,
                    const std::vector<std::pair<std::string, std::string>>& extra) {
    std::ofstream out(dir / "run_manifest");
    if (!out) throw DataError("cannot write run_manifest in '" + dir.string() + "'");
    out << "command = " << command << '\n';
    for (const auto& [k, v] : extra) out << k << " = " << v << '\n';
    for (const auto& [k, v] : config_entries(config)) out << k << " = " << v << '\n';
}

std::vector<std::pair<std::string, std::string>> data_manifest(const DataOptions& d) {
    return {{"input", d.input},           {"time_column", d.time_column},
            {"value_column", d.value_column}, {"trim_start", num(d.trim_start)},
            {"trim_end", num(d.trim_end)},     {"metadata", d.metadata},
            {"grid_points", std::to_string(d.grid_points)}};
}

struct Prepared {
    Dataset data;
    SampleMetadata meta;
};

Prepared load_data(const DataOptions& opts, std::optional<double> mass, std::optional<double> flow) {
    Prepared p;
    if (!opts.metadata.empty()) p.meta = load_metadata(opts.metadata);
    const auto raw = load_timeseries(opts.input, opts.time_column, opts.value_column);
    if (raw.dropped_missing > 0) {
        std::cerr << "dropped " << raw.dropped_missing << " row(s) with missing values\n";
    }
    const auto trimmed = trim_series(raw, opts.trim_start, opts.trim_end);
    StandardizeOptions so;
    so.filter_mass = mass ? mass : p.meta.filter_mass_ug;
    so.flow_rate = flow ? flow : p.meta.flow_rate_lpm;
    so.trim_start = opts.trim_start;
    so.trim_end = opts.trim_end;
    p.data = standardize(trimmed, so);
    return p;
}

PosteriorSample fit(const Dataset& data, const ModelConfig& config) {
    std::cerr << "fitting n=" << data.size() << " M=" << config.order << " iterations=" << config.n_iter
              << " seed=" << config.seed << '\n';
    auto rng = make_rng(config.seed, 0);
    return run_chain(config, data, rng);
}

int cmd_fit(const DataOptions& dopts, const CommonOptions& common) {
    const auto config = resolve_config(common);
    const auto prepared = load_data(dopts, std::nullopt, std::nullopt);
    const auto out = prepare_output(common.output);
    const auto sample = fit(prepared.data, config);
    const auto grid = unit_grid(dopts.grid_points);

    write_curve_csv(out / "curve.csv", posterior_curve(sample, grid));
    write_curve_csv(out / "derivative.csv", posterior_derivative(sample, grid));
    {
        std::ofstream d(out / "diagnostics.csv");
        d << "x,ess,lag1_autocorr\n";
        for (const auto& row : chain_diagnostics(sample, grid))
            d << num(row.point) << ',' << num(row.ess) << ',' << num(row.lag1_autocorr) << '\n';
    }
    const auto probs = model_probabilities(sample);
    double mean_k = 0.0, mean_n0 = 0.0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        mean_k += sample.draws_K[i];
        mean_n0 += sample.draws_n0[i];
    }
    mean_k /= static_cast<double>(sample.size());
    mean_n0 /= static_cast<double>(sample.size());
    {
        std::ofstream m(out / "posterior_meta.csv");
        m << "prob_flat,prob_linear,mean_K,mean_n0,n_draws,n_obs,mean_ess,mean_lag1\n";
        m << num(probs.prob_flat) << ',' << num(probs.prob_linear) << ',' << num(mean_k) << ','
          << num(mean_n0) << ',' << sample.size() << ',' << prepared.data.size() << ','
          << num(sample.mean_ess) << ',' << num(sample.mean_lag1) << '\n';
    }
    write_manifest(out, "fit", config, data_manifest(dopts));
    std::cout << "prob_flat=" << num(probs.prob_flat) << " prob_linear=" << num(probs.prob_linear)
              << " mean_K=" << num(mean_k) << " mean_n0=" << num(mean_n0) << '\n';
    return kExitOk;
}

int cmd_concentration(const DataOptions& dopts, const CommonOptions& common, std::optional<double> mass,
                      std::optional<double> flow) {
    const auto config = resolve_config(common);
    const auto prepared = load_data(dopts, mass, flow);
    const auto& data = prepared.data;
    if (!data.filter_mass) throw DataError("filter mass missing: pass --filter-mass-ug or a metadata file");
    if (!data.flow_rate) throw DataError("flow rate missing: pass --flow-rate-lpm or a metadata file");
    if (!(*data.filter_mass > 0.0)) throw DataError("filter mass must be positive");
    if (!(*data.flow_rate > 0.0)) throw DataError("flow rate must be positive");
    const auto out = prepare_output(common.output);
    const auto sample = fit(data, config);
    const auto grid = unit_grid(dopts.grid_points);
    const auto conc = scaled_derivative(sample, grid, *data.filter_mass, *data.flow_rate);
    write_curve_csv(out / "concentration.csv", conc.curve);

    // Trapezoid time-average of the posterior-mean concentration.
    double area = 0.0;
    for (std::size_t i = 1; i < conc.curve.size(); ++i) {
        area += 0.5 * (conc.curve.mean[i] + conc.curve.mean[i - 1]) * (conc.curve.grid[i] - conc.curve.grid[i - 1]);
    }
    const double duration = data.scaling.x_range();
    const double avg = area / duration;
    auto extra = data_manifest(dopts);
    extra.emplace_back("filter_mass_ug", num(*data.filter_mass));
    extra.emplace_back("flow_rate_lpm", num(*data.flow_rate));
    write_manifest(out, "concentration", config, extra);
    if (conc.flat_draws_excluded > 0) {
        std::cerr << "excluded " << conc.flat_draws_excluded << " flat draw(s) of " << sample.size() << '\n';
    }
    std::cout << "mean_concentration_ugm3=" << num(avg) << " duration_min=" << num(duration)
              << " flat_draws_excluded=" << conc.flat_draws_excluded << " draws_used=" << conc.draws_used << '\n';
    return kExitOk;
}

int cmd_cv(const DataOptions& dopts, const CommonOptions& common, int folds) {
    const auto config = resolve_config(common);
    const auto prepared = load_data(dopts, std::nullopt, std::nullopt);
    if (folds < 2 || static_cast<std::size_t>(folds) > prepared.data.size()) {
        throw DataError("--folds must be between 2 and the number of observations (" +
                        std::to_string(prepared.data.size()) + ")");
    }
    const auto out = prepare_output(common.output);
    std::cerr << "cross-validating with " << folds << " folds\n";
    auto rng = make_rng(config.seed, 1);
    const auto cv = kfold_cv(prepared.data, config, folds, rng);
    {
        std::ofstream f(out / "cv.csv");
        f << "fold,rmse\n";
        for (std::size_t i = 0; i < cv.fold_rmse.size(); ++i) f << i << ',' << num(cv.fold_rmse[i]) << '\n';
        f << "pooled," << num(cv.rmse) << '\n';
    }
    auto extra = data_manifest(dopts);
    extra.emplace_back("folds", std::to_string(folds));
    write_manifest(out, "cv", config, extra);
    std::cout << "cv_rmse=" << num(cv.rmse) << " cv_rmse_standardized=" << num(cv.rmse_standardized) << '\n';
    return kExitOk;
}

int cmd_simulate(const CommonOptions& common, const std::string& scenario, int n, int replicates,
                 double noise_sd, int jobs) {
    SimulationOptions opts;
    opts.scenario = Scenario{parse_scenario(scenario), n, noise_sd};
    opts.scenario.validate();
    if (replicates < 1) throw DataError("--replicates must be >= 1");
    opts.replicates = replicates;
    opts.jobs = jobs;
    opts.config = resolve_config(common);
    opts.seed = opts.config.seed;
    opts.progress = [](int done, int total) { std::cerr << "replicate " << done << '/' << total << '\n'; };
    const auto out = prepare_output(common.output);
    const auto results = run_simulation(opts);
    write_simulation_csv(out / "simulation.csv", opts.scenario, results);
    write_simulation_summary_csv(out / "simulation_summary.csv", opts.scenario, results);
    write_manifest(out, "simulate", opts.config,
                   {{"scenario", to_string(opts.scenario.name)},
                    {"n", std::to_string(n)},
                    {"replicates", std::to_string(replicates)},
                    {"noise_sd", num(noise_sd)}});
    std::vector<double> pf;
    for (const auto& r : results) pf.push_back(r.bnmr.prob_flat);
    std::cout << "replicates=" << results.size() << " mean_prob_flat=" << num(mean_and_se(pf).mean) << '\n';
    return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args) {
    CLI::App app{"Bayesian nonparametric monotone regression"};
    app.require_subcommand(1);

    DataOptions fit_data, conc_data, cv_data;
    CommonOptions fit_common, conc_common, cv_common, sim_common;
    std::optional<double> mass, flow;
    int folds = 5;
    std::string scenario;
    int n = 100, replicates = 50, jobs = 1;
    double noise_sd = 0.25;

    auto* fit_cmd = app.add_subcommand("fit", "Fit a monotone curve and its derivative");
    add_data(*fit_cmd, fit_data);
    add_common(*fit_cmd, fit_common);

    auto* conc_cmd = app.add_subcommand("concentration", "Mass-scaled derivative (time-resolved concentration)");
    add_data(*conc_cmd, conc_data);
    add_common(*conc_cmd, conc_common);
    conc_cmd->add_option("--filter-mass-ug", mass, "Total filter mass in micrograms");
    conc_cmd->add_option("--flow-rate-lpm", flow, "Flow rate in litres per minute");

    auto* cv_cmd = app.add_subcommand("cv", "K-fold cross-validation RMSE");
    add_data(*cv_cmd, cv_data);
    add_common(*cv_cmd, cv_common);
    cv_cmd->add_option("--folds", folds, "Number of folds");

    auto* sim_cmd = app.add_subcommand("simulate", "Simulation study replicates");
    add_common(*sim_cmd, sim_common);
    sim_cmd->add_option("--scenario", scenario, "flat, linear, wavy or flat_nonlinear")->required();
    sim_cmd->add_option("--n", n, "Observations per dataset");
    sim_cmd->add_option("--replicates", replicates, "Number of datasets");
    sim_cmd->add_option("--noise-sd", noise_sd, "Noise standard deviation");
    sim_cmd->add_option("--jobs", jobs, "Parallel replicates")->check(CLI::PositiveNumber);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUserError;
    }

    try {
        if (fit_cmd->parsed()) return cmd_fit(fit_data, fit_common);
        if (conc_cmd->parsed()) return cmd_concentration(conc_data, conc_common, mass, flow);
        if (cv_cmd->parsed()) return cmd_cv(cv_data, cv_common, folds);
        if (sim_cmd->parsed()) return cmd_simulate(sim_common, scenario, n, replicates, noise_sd, jobs);
    } catch (const SamplerError& e) {
        std::cerr << "sampler error: " << e.what() << '\n';
        return kExitSamplerError;
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUserError;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUserError;
    } catch (const std::domain_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUserError;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return kExitSamplerError;
    }
    return kExitUserError;
}

}  // namespace bnmr::cli
