#include "bnmr/errors.hpp"
#include "bnmr/inference.hpp"
#include "bnmr/simharness.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

using namespace bnmr;

namespace {

ModelConfig quick_config() {
    ModelConfig c;
    c.order = 20;
    c.n_iter = 3000;
    c.n_burn = 1000;
    c.thin = 4;
    return c;
}

// Every draw equal to the scenario truth, expressed on the dataset's standardized scale.
PosteriorSample oracle_sample(const Dataset& data, ScenarioName name, int m) {
    PosteriorSample s;
    s.scaling = data.scaling;
    Eigen::RowVectorXd theta = Eigen::RowVectorXd::Zero(m + 1);
    theta(0) = -data.scaling.y_mean / data.scaling.y_sd;
    if (name == ScenarioName::Linear) theta.tail(m).setConstant(1.0 / (m * data.scaling.y_sd));
    s.draws_theta = theta.replicate(5, 1);
    s.draws_labels = Eigen::MatrixXi::Zero(5, m);
    const int n0 = name == ScenarioName::Linear ? 0 : m;
    const int k = name == ScenarioName::Linear ? 1 : 0;
    s.draws_n0.assign(5, n0);
    s.draws_K.assign(5, k);
    s.draws_sigma2.assign(5, 1.0);
    s.draws_alpha.assign(5, 1.0);
    s.draws_loglik.assign(5, 0.0);
    return s;
}

}  // namespace

TEST_CASE("scenario truths at rational checkpoints") {
    const double pi = std::numbers::pi;
    struct Row {
        ScenarioName name;
        double x, f, d;
    };
    const Row table[] = {
        {ScenarioName::Flat, 0.0, 0.0, 0.0},
        {ScenarioName::Flat, 0.7, 0.0, 0.0},
        {ScenarioName::Linear, 0.0, 0.0, 1.0},
        {ScenarioName::Linear, 0.25, 0.25, 1.0},
        {ScenarioName::Linear, 1.0, 1.0, 1.0},
        {ScenarioName::Wavy, 0.0, 0.0, 2.0},
        {ScenarioName::Wavy, 1.0 / 3, 1.0 / 3, 0.0},
        {ScenarioName::Wavy, 1.0 / 6, 1.0 / (3 * pi) + 1.0 / 6, 1.0},
        {ScenarioName::Wavy, 0.5, -1.0 / (3 * pi) + 0.5, 1.0},
        {ScenarioName::FlatNonlinear, 0.25, 0.0, 0.0},
        {ScenarioName::FlatNonlinear, 0.5, 0.0, 0.0},
        {ScenarioName::FlatNonlinear, 0.75, 0.25, 2.0},
        {ScenarioName::FlatNonlinear, 1.0, 1.0, 4.0},
    };
    for (const auto& r : table) {
        CAPTURE(to_string(r.name));
        CAPTURE(r.x);
        CHECK(scenario_truth(r.name, r.x) == doctest::Approx(r.f).epsilon(1e-14));
        CHECK(scenario_truth_derivative(r.name, r.x) == doctest::Approx(r.d).epsilon(1e-14));
    }
    for (auto name : {ScenarioName::Flat, ScenarioName::Linear, ScenarioName::Wavy, ScenarioName::FlatNonlinear}) {
        CHECK(parse_scenario(to_string(name)) == name);
        for (double x = 0.01; x < 1.0; x += 0.07) {
            const double h = 1e-6;
            const double fd = (scenario_truth(name, x + h) - scenario_truth(name, x - h)) / (2 * h);
            CHECK(std::abs(scenario_truth_derivative(name, x) - fd) < 1e-5);
            CHECK(scenario_truth_derivative(name, x) >= 0.0);
        }
    }
    CHECK_THROWS_AS(parse_scenario("curvy"), std::invalid_argument);
    CHECK_THROWS(Scenario{ScenarioName::Flat, 5, 0.25}.validate());
    CHECK_THROWS(Scenario{ScenarioName::Flat, 100, 0.0}.validate());
}

TEST_CASE("dataset generation") {
    auto r1 = make_rng(3, 7);
    auto r2 = make_rng(3, 7);
    const Scenario sc{ScenarioName::Wavy, 100, 0.25};
    const auto a = generate_dataset(sc, r1);
    const auto b = generate_dataset(sc, r2);
    CHECK(a.x == b.x);
    CHECK(a.y == b.y);
    CHECK(a.size() == 100);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a.x[i] >= 0.0);
        CHECK(a.x[i] <= 1.0);
        if (i > 0) CHECK(a.x[i] >= a.x[i - 1]);
    }
    CHECK_NOTHROW(a.validate());
    CHECK(a.scaling.x_min == 0.0);
    CHECK(a.scaling.x_max == 1.0);

    auto r3 = make_rng(4);
    const auto big = generate_dataset({ScenarioName::Linear, 1000000, 0.25}, r3);
    const auto raw = destandardize(big);
    std::vector<double> noise(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) noise[i] = raw.value[i] - scenario_truth(ScenarioName::Linear, raw.time[i]);
    CHECK(std::abs(std::sqrt(oracle::variance(noise)) - 0.25) < 1e-3);
}

TEST_CASE("evaluate_fit on an oracle sample") {
    for (auto name : {ScenarioName::Flat, ScenarioName::Linear}) {
        auto rng = make_rng(5);
        const Scenario sc{name, 100, 0.25};
        const auto data = generate_dataset(sc, rng);
        const auto report = evaluate_fit(oracle_sample(data, name, 10), sc);
        CHECK(report.rmse_f < 1e-12);
        CHECK(report.rmse_deriv < 1e-10);
        CHECK(report.coverage_f == 1.0);
        CHECK(report.coverage_deriv == 1.0);
        CHECK(report.prob_flat == (name == ScenarioName::Flat ? 1.0 : 0.0));
        CHECK(report.prob_linear == (name == ScenarioName::Linear ? 1.0 : 0.0));
    }
}

TEST_CASE("k-fold cross-validation") {
    auto rng = make_rng(6);
    const auto data = generate_dataset({ScenarioName::Wavy, 60, 0.25}, rng);
    const auto config = quick_config();
    auto ra = make_rng(8);
    auto rb = make_rng(8);
    const auto a = kfold_cv(data, config, 5, ra);
    const auto b = kfold_cv(data, config, 5, rb);
    CHECK(a.rmse == b.rmse);
    CHECK(a.fold_rmse == b.fold_rmse);
    CHECK(a.rmse >= 0.0);
    CHECK(a.fold_rmse.size() == 5);
    CHECK(a.rmse_standardized == doctest::Approx(a.rmse / data.scaling.y_sd));

    // Noiseless straight line.
    RawSeries line;
    for (int i = 0; i < 80; ++i) {
        line.time.push_back(i / 79.0);
        line.value.push_back(2.0 + 3.0 * line.time.back());
    }
    const auto clean = standardize(line);
    auto rc = make_rng(9);
    const auto c = kfold_cv(clean, ModelConfig{}, 5, rc);
    CHECK(c.rmse_standardized < 0.05);

    CHECK_THROWS_AS(kfold_cv(data, config, 1, rc), DataError);
    CHECK_THROWS_AS(kfold_cv(data, config, 61, rc), DataError);
}

TEST_CASE("ordinary least squares comparator") {
    RawSeries s;
    for (int i = 0; i < 20; ++i) {
        s.time.push_back(i / 19.0);
        s.value.push_back(2.0 * s.time.back());
    }
    const auto exact = ols_fit(standardize(s));
    CHECK(exact.slope == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(exact.intercept == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
    CHECK(exact.p_value < 1e-12);
    CHECK(std::isnan(exact.rmse_on_grid));

    auto rng = make_rng(10);
    const auto data = generate_dataset({ScenarioName::Linear, 50, 0.25}, rng);
    auto raw = destandardize(data);
    const auto base = ols_fit(standardize(raw, {.x_lower = 0.0, .x_upper = 1.0}));
    for (auto& v : raw.value) v += 17.0;
    const auto shifted = ols_fit(standardize(raw, {.x_lower = 0.0, .x_upper = 1.0}));
    CHECK(shifted.slope == doctest::Approx(base.slope).epsilon(1e-10));
    CHECK(shifted.intercept == doctest::Approx(base.intercept + 17.0).epsilon(1e-10));
    CHECK(shifted.p_value == doctest::Approx(base.p_value).epsilon(1e-8));

    const auto with_truth = ols_fit(data, ScenarioName::Linear);
    CHECK(with_truth.rmse_on_grid >= 0.0);
    CHECK(with_truth.rmse_deriv_on_grid == doctest::Approx(std::abs(with_truth.slope - 1.0)));

    std::vector<double> p;
    for (int r = 0; r < 4000; ++r) {
        auto rr = make_rng(11, static_cast<std::uint64_t>(r));
        p.push_back(ols_fit(generate_dataset({ScenarioName::Flat, 100, 0.25}, rr)).p_value);
    }
    // Under the null the p-value is uniform: mean 1/2, sd 1/sqrt(12).
    CHECK(std::abs(oracle::mean(p) - 0.5) < 5.0 * std::sqrt(1.0 / 12.0 / p.size()));
}

TEST_CASE("replicate aggregation and job-count independence") {
    SimulationOptions opts;
    opts.scenario = {ScenarioName::Linear, 40, 0.25};
    opts.replicates = 4;
    opts.seed = 12;
    opts.config = quick_config();
    opts.jobs = 1;
    const auto serial = run_simulation(opts);
    opts.jobs = 3;
    const auto parallel = run_simulation(opts);
    REQUIRE(serial.size() == 4);
    REQUIRE(parallel.size() == 4);
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(serial[i].replicate == static_cast<int>(i));
        CHECK(serial[i].bnmr.rmse_f == parallel[i].bnmr.rmse_f);
        CHECK(serial[i].bnmr.prob_linear == parallel[i].bnmr.prob_linear);
        CHECK(serial[i].ols.p_value == parallel[i].ols.p_value);
        CHECK(serial[i].bnmr.coverage_f >= 0.0);
        CHECK(serial[i].bnmr.coverage_f <= 1.0);
    }

    const auto ms = mean_and_se({1.0, 2.0, 3.0, 4.0});
    CHECK(ms.mean == 2.5);
    CHECK(ms.se == doctest::Approx(std::sqrt(5.0 / 3.0) / 2.0));
    std::vector<double> v;
    for (int i = 0; i < 30; ++i) v.push_back(std::sin(i));
    CHECK(mean_and_se(v).se <= std::sqrt(oracle::variance(v)) / std::sqrt(30.0) + 1e-15);

    const auto dir = std::filesystem::temp_directory_path() / "bnmr_test_sim";
    std::filesystem::create_directories(dir);
    write_simulation_csv(dir / "sim.csv", opts.scenario, serial);
    write_simulation_summary_csv(dir / "summary.csv", opts.scenario, serial);
    std::ifstream in(dir / "sim.csv");
    std::string header, line;
    std::getline(in, header);
    CHECK(header.rfind("scenario,n,replicate,rmse_f_x100,coverage,prob_flat,prob_linear,rmse_deriv_x100", 0) == 0);
    int rows = 0;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == 4);
}
