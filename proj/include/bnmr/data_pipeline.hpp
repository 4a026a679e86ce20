#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace bnmr {

/// Time series as read from disk. Times are in minutes.
struct RawSeries {
    std::vector<double> time;
    std::vector<double> value;
    std::size_t dropped_missing = 0;
    std::size_t merged_duplicates = 0;
    std::optional<std::string> time_origin;  // first ISO-8601 timestamp, when times were parsed

    std::size_t size() const { return time.size(); }
};

/// Inverse transforms back to the original time and outcome units.
struct ScalingInfo {
    double y_mean = 0.0;
    double y_sd = 1.0;
    double x_min = 0.0;
    double x_max = 1.0;
    double trim_start = 0.0;
    double trim_end = 0.0;

    double x_range() const { return x_max - x_min; }
    double to_original_x(double u) const { return x_min + u * x_range(); }
    double to_unit_x(double t) const { return (t - x_min) / x_range(); }
    double to_original_y(double z) const { return y_mean + y_sd * z; }
};

struct Dataset {
    std::vector<double> x;  // in [0,1], nondecreasing
    std::vector<double> y;  // mean 0, sd 1
    ScalingInfo scaling;
    std::optional<double> filter_mass;  // micrograms
    std::optional<double> flow_rate;    // litres per minute

    std::size_t size() const { return x.size(); }
    /// Throws DataError if any invariant fails.
    void validate() const;
};

struct SampleMetadata {
    std::optional<double> filter_mass_ug;
    std::optional<double> flow_rate_lpm;
    std::optional<std::string> sample_id;
};

/// Reads a CSV with a header row. Times may be numeric minutes or ISO-8601
/// timestamps (converted to minutes since the first row). Rows with a blank or
/// non-numeric value are dropped; rows sharing a timestamp are averaged.
/// Throws DataError on unreadable files, missing columns, no valid rows, or
/// decreasing timestamps.
RawSeries load_timeseries(const std::filesystem::path& path,
                          const std::string& time_column = "time",
                          const std::string& value_column = "pressure_drop");

/// key=value sidecar with filter_mass_ug, flow_rate_lpm and sample_id.
SampleMetadata load_metadata(const std::filesystem::path& path);

/// Parses "YYYY-MM-DD[T ]hh:mm[:ss[.fff]][Z]" to minutes since the Unix epoch.
std::optional<double> parse_iso8601_minutes(const std::string& text);

/// Keeps observations with t0 + trim_start <= t <= t_end - trim_end (minutes).
RawSeries trim_series(const RawSeries& series, double trim_start = 30.0, double trim_end = 5.0);

struct StandardizeOptions {
    std::optional<double> filter_mass;
    std::optional<double> flow_rate;
    // Known x domain; defaults to the observed min/max.
    std::optional<double> x_lower;
    std::optional<double> x_upper;
    double trim_start = 0.0;
    double trim_end = 0.0;
};

/// Scales time to [0,1] and the outcome to mean 0, sd 1 (sample sd).
Dataset standardize(const RawSeries& series, const StandardizeOptions& options = {});

/// Inverse of standardize on the retained observations.
RawSeries destandardize(const Dataset& data);

/// Subset of observations; scaling metadata is shared with the parent.
Dataset subset(const Dataset& data, const std::vector<std::size_t>& indices);

}  // namespace bnmr
