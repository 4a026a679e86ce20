#include "cli_harness.hpp"

#include <doctest.h>

#include <cmath>
#include <fstream>
#include <random>

using namespace testing_cli;

namespace {

const std::string kData = BNMR_TEST_DATA_DIR;

// Short chains keep the suite fast; correctness of the sampler is checked elsewhere.
std::vector<std::string> quick(std::vector<std::string> args) {
    for (const char* a : {"--order", "20", "--n-iter", "2000", "--n-burn", "500", "--thin", "2"}) args.emplace_back(a);
    return args;
}

void write_line_csv(const std::string& path, int n, double slope, double sd, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, sd);
    std::ofstream out(path);
    out << "time,pressure_drop\n";
    for (int i = 0; i < n; ++i) out << i << ',' << 1.0 + slope * i + noise(rng) << '\n';
}

}  // namespace

TEST_CASE("fit writes a monotone curve and its summaries") {
    ScratchDir dir("fit");
    const auto out = dir / "out";
    const auto r = invoke(quick({"fit", "-i", kData + "/synthetic_linear.csv", "-o", out, "--trim-start", "0",
                                 "--trim-end", "0", "--grid-points", "50"}));
    REQUIRE_MESSAGE(r.code == 0, r.err);
    CHECK(r.out.rfind("prob_flat=", 0) == 0);

    const auto curve = read_curve(fs::path(out) / "curve.csv");
    REQUIRE(curve.mean.size() == 50);
    for (std::size_t i = 1; i < curve.mean.size(); ++i) CHECK(curve.mean[i] >= curve.mean[i - 1] - 1e-12);
    for (std::size_t i = 0; i < curve.mean.size(); ++i) {
        CHECK(curve.lower[i] <= curve.mean[i]);
        CHECK(curve.mean[i] <= curve.upper[i]);
    }
    // Data rise from 0.5 to 1.7 over two hours.
    CHECK(curve.mean.front() == doctest::Approx(0.5).epsilon(0.1));
    CHECK(curve.mean.back() == doctest::Approx(1.7).epsilon(0.1));

    const auto deriv = read_curve(fs::path(out) / "derivative.csv");
    for (double d : deriv.lower) CHECK(d >= 0.0);
    for (const char* f : {"diagnostics.csv", "posterior_meta.csv", "run_manifest"}) {
        CHECK_MESSAGE(fs::exists(fs::path(out) / f), f);
    }
}

TEST_CASE("fit with a fixed seed is byte-for-byte reproducible") {
    ScratchDir dir("seed");
    const auto csv = dir / "line.csv";
    write_line_csv(csv, 60, 0.02, 0.1, 3);
    std::string first_out;
    for (const char* sub : {"a", "b"}) {
        const auto r = invoke(quick({"fit", "-i", csv, "-o", dir / sub, "--trim-start", "0", "--trim-end", "0",
                                     "--seed", "7"}));
        REQUIRE_MESSAGE(r.code == 0, r.err);
        if (first_out.empty()) first_out = r.out;
        else CHECK(r.out == first_out);
    }
    CHECK(snapshot(dir.path() / "a") == snapshot(dir.path() / "b"));

    const auto other = invoke(quick({"fit", "-i", csv, "-o", dir / "c", "--trim-start", "0", "--trim-end", "0",
                                     "--seed", "8"}));
    REQUIRE(other.code == 0);
    CHECK(slurp(dir.path() / "c" / "curve.csv") != slurp(dir.path() / "a" / "curve.csv"));
}

TEST_CASE("user errors exit with code 1 and a readable message") {
    ScratchDir dir("err");
    SUBCASE("missing input names the path") {
        const auto r = invoke(quick({"fit", "-i", dir / "nope.csv", "-o", dir / "out"}));
        CHECK(r.code == 1);
        CHECK(r.err.find("nope.csv") != std::string::npos);
    }
    SUBCASE("unknown subcommand") { CHECK(invoke({"frobnicate"}).code == 1); }
    SUBCASE("no subcommand") { CHECK(invoke({}).code == 1); }
    SUBCASE("bad model setting") {
        write_line_csv(dir / "l.csv", 30, 0.02, 0.1, 1);
        const auto r = invoke({"fit", "-i", dir / "l.csv", "-o", dir / "out", "--trim-start", "0", "--trim-end", "0",
                               "--order", "0"});
        CHECK(r.code == 1);
        CHECK(r.err.find("order") != std::string::npos);
    }
    SUBCASE("trim longer than the series") {
        write_line_csv(dir / "l.csv", 30, 0.02, 0.1, 1);
        const auto r = invoke(quick({"fit", "-i", dir / "l.csv", "-o", dir / "out"}));
        CHECK(r.code == 1);
        CHECK(r.err.find("trim") != std::string::npos);
    }
    SUBCASE("config file with an unknown key") {
        std::ofstream(dir / "bad.cfg") << "orderr = 20\n";
        write_line_csv(dir / "l.csv", 30, 0.02, 0.1, 1);
        const auto r = invoke({"fit", "-i", dir / "l.csv", "-o", dir / "out", "--config", dir / "bad.cfg"});
        CHECK(r.code == 1);
        CHECK(r.err.find("orderr") != std::string::npos);
    }
}

TEST_CASE("concentration scales linearly with filter mass") {
    ScratchDir dir("conc");
    const auto csv = dir / "line.csv";
    write_line_csv(csv, 80, 0.02, 0.05, 11);
    auto run_with_mass = [&](const std::string& mass, const std::string& sub) {
        return invoke(quick({"concentration", "-i", csv, "-o", dir / sub, "--trim-start", "0", "--trim-end", "0",
                             "--filter-mass-ug", mass, "--flow-rate-lpm", "2", "--seed", "5"}));
    };
    const auto one = run_with_mass("100", "one");
    const auto two = run_with_mass("200", "two");
    REQUIRE_MESSAGE(one.code == 0, one.err);
    REQUIRE_MESSAGE(two.code == 0, two.err);
    const auto a = read_curve(dir.path() / "one" / "concentration.csv");
    const auto b = read_curve(dir.path() / "two" / "concentration.csv");
    REQUIRE(a.mean.size() == b.mean.size());
    for (std::size_t i = 0; i < a.mean.size(); ++i) {
        CHECK(b.mean[i] == doctest::Approx(2.0 * a.mean[i]).epsilon(1e-9));
        CHECK(b.lower[i] == doctest::Approx(2.0 * a.lower[i]).epsilon(1e-9));
        CHECK(b.upper[i] == doctest::Approx(2.0 * a.upper[i]).epsilon(1e-9));
    }
    // 100 ug over 79 min at 2 L/min.
    CHECK(field(one.out, "mean_concentration_ugm3") ==
          doctest::Approx(100.0 / (2.0 * 79.0) * 1000.0).epsilon(0.01));
    CHECK(field(one.out, "duration_min") == doctest::Approx(79.0));
}

TEST_CASE("concentration reads mass and flow from metadata") {
    ScratchDir dir("meta");
    const auto r = invoke(quick({"concentration", "-i", kData + "/synthetic_mars.csv", "--metadata",
                                 kData + "/synthetic_mars.meta", "-o", dir / "out", "--seed", "2"}));
    REQUIRE_MESSAGE(r.code == 0, r.err);
    CHECK(field(r.out, "duration_min") == doctest::Approx(445.0));
    const double expected = 414.018 / (1.0 * 445.0) * 1000.0;
    CHECK(field(r.out, "mean_concentration_ugm3") == doctest::Approx(expected).epsilon(0.01));
    const auto manifest = slurp(dir.path() / "out" / "run_manifest");
    CHECK(manifest.find("filter_mass_ug = 414.018") != std::string::npos);
}

TEST_CASE("concentration rejects missing or nonpositive mass") {
    ScratchDir dir("conc_err");
    const auto csv = dir / "line.csv";
    write_line_csv(csv, 30, 0.02, 0.05, 1);
    const std::vector<std::string> base{"concentration", "-i", csv, "-o", dir / "out", "--trim-start", "0",
                                        "--trim-end", "0", "--flow-rate-lpm", "1"};
    auto with = [&](std::vector<std::string> extra) {
        auto a = base;
        a.insert(a.end(), extra.begin(), extra.end());
        return invoke(quick(a));
    };
    const auto missing = with({});
    CHECK(missing.code == 1);
    CHECK(missing.err.find("mass") != std::string::npos);
    CHECK(with({"--filter-mass-ug", "0"}).code == 1);
    CHECK(with({"--filter-mass-ug", "-3"}).code == 1);
}

TEST_CASE("cv validates folds and is reproducible") {
    ScratchDir dir("cv");
    const auto csv = dir / "line.csv";
    write_line_csv(csv, 40, 0.02, 0.1, 4);
    const std::vector<std::string> base{"cv", "-i", csv, "--trim-start", "0", "--trim-end", "0", "--seed", "9"};
    auto with = [&](const std::string& out, const std::string& folds) {
        auto a = base;
        for (const auto& s : {std::string("-o"), out, std::string("--folds"), folds}) a.push_back(s);
        return invoke(quick(a));
    };
    CHECK(with(dir / "x", "41").code == 1);
    CHECK(with(dir / "x", "1").code == 1);

    const auto a = with(dir / "a", "4");
    const auto b = with(dir / "b", "4");
    REQUIRE_MESSAGE(a.code == 0, a.err);
    REQUIRE(b.code == 0);
    CHECK(a.out == b.out);
    CHECK(snapshot(dir.path() / "a") == snapshot(dir.path() / "b"));
    // Header, one row per fold, pooled row.
    CHECK(count_lines(dir.path() / "a" / "cv.csv") == 6);
    CHECK(field(a.out, "cv_rmse") > 0.0);
    CHECK(field(a.out, "cv_rmse") < 0.3);
}

TEST_CASE("simulate writes one row per replicate") {
    ScratchDir dir("sim");
    const auto r = invoke(quick({"simulate", "--scenario", "linear", "--n", "40", "--replicates", "3", "--jobs", "2",
                                 "-o", dir / "out", "--seed", "4"}));
    REQUIRE_MESSAGE(r.code == 0, r.err);
    CHECK(count_lines(dir.path() / "out" / "simulation.csv") == 4);
    CHECK(fs::exists(dir.path() / "out" / "simulation_summary.csv"));
    CHECK(field(r.out, "replicates") == 3.0);
    const double pf = field(r.out, "mean_prob_flat");
    CHECK(pf >= 0.0);
    CHECK(pf <= 1.0);

    const auto again = invoke(quick({"simulate", "--scenario", "linear", "--n", "40", "--replicates", "3", "--jobs",
                                     "1", "-o", dir / "again", "--seed", "4"}));
    REQUIRE(again.code == 0);
    CHECK(slurp(dir.path() / "out" / "simulation.csv") == slurp(dir.path() / "again" / "simulation.csv"));
}

TEST_CASE("simulate rejects bad arguments") {
    ScratchDir dir("sim_err");
    CHECK(invoke({"simulate", "--scenario", "sideways", "-o", dir / "o"}).code == 1);
    CHECK(invoke({"simulate", "--scenario", "flat", "--n", "2", "-o", dir / "o"}).code == 1);
    CHECK(invoke({"simulate", "--scenario", "flat", "--replicates", "0", "-o", dir / "o"}).code == 1);
    CHECK(invoke({"simulate", "--scenario", "flat", "--noise-sd", "-1", "-o", dir / "o"}).code == 1);
}
