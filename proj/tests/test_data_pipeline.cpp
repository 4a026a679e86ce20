#include "bnmr/data_pipeline.hpp"
#include "bnmr/errors.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

using namespace bnmr;

namespace {

std::filesystem::path write_file(const std::string& name, const std::string& body) {
    const auto dir = std::filesystem::temp_directory_path() / "bnmr_test_pipeline";
    std::filesystem::create_directories(dir);
    const auto path = dir / name;
    std::ofstream(path) << body;
    return path;
}

RawSeries regular_series(double minutes, double step) {
    RawSeries s;
    for (double t = 0.0; t <= minutes + 1e-9; t += step) {
        s.time.push_back(t);
        s.value.push_back(100.0 + 0.1 * t + std::sin(t));
    }
    return s;
}

double mean(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); }

double sample_sd(const std::vector<double>& v) {
    const double m = mean(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / (v.size() - 1));
}

}  // namespace

TEST_CASE("blank values are dropped and counted") {
    const auto path = write_file("blank.csv", "time,pressure_drop\n0,1.5\n1,\n2,1.7\n");
    const auto s = load_timeseries(path);
    CHECK(s.size() == 2);
    CHECK(s.dropped_missing == 1);
    CHECK(s.time == std::vector<double>{0.0, 2.0});
    CHECK(s.value == std::vector<double>{1.5, 1.7});
}

TEST_CASE("numeric minute times are preserved verbatim") {
    const auto path = write_file("numeric.csv", "pressure_drop,time,other\n10.25,0.5,x\n10.5,1.0,y\n10.75,17.125,z\nNA,20,w\n");
    const auto s = load_timeseries(path);
    CHECK(s.time == std::vector<double>{0.5, 1.0, 17.125});
    CHECK(s.value == std::vector<double>{10.25, 10.5, 10.75});
    CHECK(s.dropped_missing == 1);
    CHECK_FALSE(s.time_origin.has_value());
}

TEST_CASE("custom column names and quoted fields") {
    const auto path = write_file("custom.csv", "\"minutes\",\"dp, kPa\"\n0,\"1.0\"\n1,\"2.0\"\n");
    const auto s = load_timeseries(path, "minutes", "dp, kPa");
    CHECK(s.value == std::vector<double>{1.0, 2.0});
    CHECK_THROWS_AS(load_timeseries(path), DataError);
}

TEST_CASE("out-of-order timestamps are rejected with the offending lines") {
    const auto path = write_file("order.csv", "time,pressure_drop\n0,1\n2,1\n1,1\n3,1\n");
    try {
        load_timeseries(path);
        FAIL("expected DataError");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("out of order") != std::string::npos);
        CHECK(std::string(e.what()).find('4') != std::string::npos);
    }
}

TEST_CASE("duplicate timestamps are averaged") {
    const auto path = write_file("dup.csv", "time,pressure_drop\n0,1\n1,2\n1,4\n2,5\n");
    const auto s = load_timeseries(path);
    CHECK(s.time == std::vector<double>{0.0, 1.0, 2.0});
    CHECK(s.value == std::vector<double>{1.0, 3.0, 5.0});
    CHECK(s.merged_duplicates == 1);
}

TEST_CASE("unreadable or empty inputs") {
    CHECK_THROWS_AS(load_timeseries("/nonexistent/file.csv"), DataError);
    CHECK_THROWS_AS(load_timeseries(write_file("empty.csv", "")), DataError);
    CHECK_THROWS_AS(load_timeseries(write_file("novalid.csv", "time,pressure_drop\n0,\n1,abc\n")), DataError);
}

TEST_CASE("ISO-8601 timestamps become minutes since the first row") {
    const auto a = parse_iso8601_minutes("2020-02-29T23:59:30Z");
    const auto b = parse_iso8601_minutes("2020-03-01 00:00:00");
    REQUIRE(a);
    REQUIRE(b);
    CHECK(*b - *a == doctest::Approx(0.5));
    CHECK(*parse_iso8601_minutes("1970-01-01T00:00") == 0.0);
    CHECK(*parse_iso8601_minutes("1970-01-02T00:00:00.5") == doctest::Approx(1440.0 + 0.5 / 60.0));
    CHECK_FALSE(parse_iso8601_minutes("2020-13-01T00:00:00"));
    CHECK_FALSE(parse_iso8601_minutes("2021-02-29T00:00:00"));
    CHECK_FALSE(parse_iso8601_minutes("12.5"));

    const auto path = write_file("iso.csv",
                                 "time,pressure_drop\n2021-06-01T08:00:00,1\n2021-06-01T08:00:30,2\n2021-06-01T09:30:00,3\n");
    const auto s = load_timeseries(path);
    CHECK(s.time == std::vector<double>{0.0, 0.5, 90.0});
    REQUIRE(s.time_origin);
    CHECK(*s.time_origin == "2021-06-01T08:00:00");
}

TEST_CASE("trimming keeps the protocol window") {
    // Eight hours at 30-second resolution.
    const auto s = regular_series(480.0, 0.5);
    const auto t = trim_series(s);
    CHECK(t.time.front() == doctest::Approx(30.0));
    CHECK(t.time.back() == doctest::Approx(475.0));
    CHECK(t.time.back() - t.time.front() == doctest::Approx(7 * 60 + 25));

    const auto same = trim_series(s, 0.0, 0.0);
    CHECK(same.time == s.time);
    CHECK(same.value == s.value);
    const auto again = trim_series(t, 0.0, 0.0);
    CHECK(again.time == t.time);

    CHECK_THROWS_AS(trim_series(regular_series(20.0, 0.5)), DataError);
    CHECK_THROWS_AS(trim_series(s, -1.0, 5.0), DataError);
}

TEST_CASE("standardize small examples") {
    RawSeries s;
    s.time = {10.0, 20.0, 30.0};
    s.value = {1.0, 2.0, 3.0};
    const auto d = standardize(s);
    CHECK(d.x == std::vector<double>{0.0, 0.5, 1.0});
    CHECK(std::abs(mean(d.y)) < 1e-15);
    CHECK(sample_sd(d.y) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(d.y[0] == doctest::Approx(-1.0));
    CHECK(d.scaling.y_mean == 2.0);
    CHECK(d.scaling.y_sd == 1.0);
    CHECK(d.scaling.x_min == 10.0);
    CHECK(d.scaling.x_max == 30.0);
    CHECK_NOTHROW(d.validate());

    s.value = {4.0, 4.0, 4.0};
    try {
        standardize(s);
        FAIL("expected DataError");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("degenerate series") != std::string::npos);
    }
    s.time.pop_back();
    s.value = {1.0, 2.0};
    CHECK_THROWS_AS(standardize(s), DataError);
}

TEST_CASE("standardize invariants and exact round trip") {
    const auto s = trim_series(regular_series(480.0, 0.5));
    StandardizeOptions opts;
    opts.filter_mass = 480.0;
    opts.flow_rate = 1.0;
    opts.trim_start = 30.0;
    opts.trim_end = 5.0;
    const auto d = standardize(s, opts);
    CHECK(std::abs(mean(d.y)) < 1e-10);
    CHECK(std::abs(sample_sd(d.y) - 1.0) < 1e-10);
    CHECK(d.x.front() == 0.0);
    CHECK(d.x.back() == 1.0);
    CHECK(d.filter_mass == 480.0);
    CHECK(d.scaling.trim_start == 30.0);
    const auto back = destandardize(d);
    REQUIRE(back.size() == s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        CHECK(std::abs(back.time[i] - s.time[i]) <= 1e-12 * std::abs(s.time[i]) + 1e-12);
        CHECK(std::abs(back.value[i] - s.value[i]) <= 1e-12 * std::abs(s.value[i]));
    }
}

TEST_CASE("known x domain and subsets") {
    RawSeries s;
    s.time = {0.2, 0.4, 0.9};
    s.value = {1.0, 3.0, 2.0};
    StandardizeOptions opts;
    opts.x_lower = 0.0;
    opts.x_upper = 1.0;
    const auto d = standardize(s, opts);
    CHECK(d.x[0] == doctest::Approx(0.2));
    CHECK(d.x[2] == doctest::Approx(0.9));
    const auto sub = subset(d, {0, 2});
    CHECK(sub.size() == 2);
    CHECK(sub.y[1] == d.y[2]);
    CHECK(sub.scaling.y_mean == d.scaling.y_mean);
    CHECK_NOTHROW(sub.validate());
}

TEST_CASE("dataset validation") {
    Dataset d;
    d.x = {0.0, 0.6, 0.5};
    d.y = {0.0, 1.0, -1.0};
    CHECK_THROWS_AS(d.validate(), DataError);
    d.x = {0.0, 0.5, 1.5};
    CHECK_THROWS_AS(d.validate(), DataError);
    d.x = {0.0, 0.5};
    CHECK_THROWS_AS(d.validate(), DataError);
}

TEST_CASE("metadata sidecar") {
    const auto path = write_file("meta.txt", "# run 7\nfilter_mass_ug = 512.5\nflow_rate_lpm=1.0\nsample_id = MARS-07\n");
    const auto m = load_metadata(path);
    CHECK(m.filter_mass_ug == 512.5);
    CHECK(m.flow_rate_lpm == 1.0);
    CHECK(m.sample_id == "MARS-07");
    CHECK_THROWS_AS(load_metadata(write_file("bad_meta.txt", "filter_mass_ug = heavy\n")), DataError);
    CHECK_THROWS_AS(load_metadata("/nonexistent/meta.txt"), DataError);
}
