#include "bnmr/data_pipeline.hpp"

#include "bnmr/errors.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

namespace bnmr {

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                field += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                field += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(trim(field));
            field.clear();
        } else {
            field += c;
        }
    }
    fields.push_back(trim(field));
    return fields;
}

std::optional<double> parse_number(const std::string& text) {
    if (text.empty()) return std::nullopt;
    double v = 0.0;
    const char* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc() || ptr != end || !std::isfinite(v)) return std::nullopt;
    return v;
}

double mean_of(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

std::optional<double> parse_iso8601_minutes(const std::string& text) {
    int year = 0, month = 0, day = 0, hour = 0, minute = 0;
    double second = 0.0;
    char sep = 0;
    int consumed = 0;
    if (std::sscanf(text.c_str(), "%4d-%2d-%2d%c%2d:%2d%n", &year, &month, &day, &sep, &hour,
                    &minute, &consumed) != 6) {
        return std::nullopt;
    }
    if (sep != 'T' && sep != ' ') return std::nullopt;
    std::string rest = text.substr(static_cast<std::size_t>(consumed));
    if (!rest.empty() && rest.front() == ':') {
        std::size_t pos = 1;
        while (pos < rest.size() && (std::isdigit(static_cast<unsigned char>(rest[pos])) || rest[pos] == '.'))
            ++pos;
        auto s = parse_number(rest.substr(1, pos - 1));
        if (!s) return std::nullopt;
        second = *s;
        rest = rest.substr(pos);
    }
    if (!(rest.empty() || rest == "Z")) return std::nullopt;
    using namespace std::chrono;
    const year_month_day ymd{std::chrono::year{year}, std::chrono::month{static_cast<unsigned>(month)},
                             std::chrono::day{static_cast<unsigned>(day)}};
    if (!ymd.ok() || hour > 23 || minute > 59 || second >= 61.0) return std::nullopt;
    const auto days = sys_days{ymd}.time_since_epoch().count();
    return static_cast<double>(days) * 1440.0 + hour * 60.0 + minute + second / 60.0;
}

RawSeries load_timeseries(const std::filesystem::path& path, const std::string& time_column,
                          const std::string& value_column) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open input file '" + path.string() + "'");
    std::string line;
    if (!std::getline(in, line)) throw DataError("input file '" + path.string() + "' is empty");
    const auto header = split_csv_line(line);
    const auto find_col = [&](const std::string& name) {
        const auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) {
            throw DataError("column '" + name + "' not found in '" + path.string() + "'");
        }
        return static_cast<std::size_t>(it - header.begin());
    };
    const std::size_t tcol = find_col(time_column);
    const std::size_t vcol = find_col(value_column);

    RawSeries raw;
    std::vector<std::size_t> line_numbers;
    std::optional<double> origin;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto fields = split_csv_line(line);
        const std::string tfield = tcol < fields.size() ? fields[tcol] : std::string{};
        const std::string vfield = vcol < fields.size() ? fields[vcol] : std::string{};
        const auto value = parse_number(vfield);
        std::optional<double> t = parse_number(tfield);
        if (!t && !tfield.empty()) {
            t = parse_iso8601_minutes(tfield);
            if (t) {
                if (!origin) {
                    origin = *t;
                    raw.time_origin = tfield;
                }
                *t -= *origin;
            }
        }
        if (!t || !value) {
            ++raw.dropped_missing;
            continue;
        }
        raw.time.push_back(*t);
        raw.value.push_back(*value);
        line_numbers.push_back(line_no);
    }
    if (raw.time.empty()) throw DataError("no valid rows in '" + path.string() + "'");

    std::string offending;
    std::size_t n_bad = 0;
    for (std::size_t i = 1; i < raw.time.size(); ++i) {
        if (raw.time[i] < raw.time[i - 1]) {
            if (n_bad < 20) {
                offending += (offending.empty() ? "" : ", ") + std::to_string(line_numbers[i]);
            }
            ++n_bad;
        }
    }
    if (n_bad > 0) {
        throw DataError("timestamps out of order in '" + path.string() + "' at line(s) " +
                        offending + (n_bad > 20 ? ", ..." : ""));
    }

    // Average runs of equal timestamps.
    RawSeries merged;
    merged.dropped_missing = raw.dropped_missing;
    merged.time_origin = raw.time_origin;
    for (std::size_t i = 0; i < raw.time.size();) {
        std::size_t j = i;
        double sum = 0.0;
        while (j < raw.time.size() && raw.time[j] == raw.time[i]) sum += raw.value[j++];
        merged.time.push_back(raw.time[i]);
        merged.value.push_back(sum / static_cast<double>(j - i));
        merged.merged_duplicates += j - i - 1;
        i = j;
    }
    if (merged.merged_duplicates > 0) {
        std::cerr << "note: averaged " << merged.merged_duplicates
                  << " duplicate-timestamp row(s) in '" << path.string() << "'\n";
    }
    return merged;
}

SampleMetadata load_metadata(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open metadata file '" + path.string() + "'");
    SampleMetadata meta;
    std::string line;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key == "filter_mass_ug" || key == "flow_rate_lpm") {
            const auto v = parse_number(value);
            if (!v) throw DataError("metadata '" + key + "' is not numeric: '" + value + "'");
            (key == "filter_mass_ug" ? meta.filter_mass_ug : meta.flow_rate_lpm) = *v;
        } else if (key == "sample_id") {
            meta.sample_id = value;
        }
    }
    return meta;
}

RawSeries trim_series(const RawSeries& series, double trim_start, double trim_end) {
    if (trim_start < 0.0 || trim_end < 0.0) throw DataError("trim durations must be nonnegative");
    if (series.time.empty()) throw DataError("cannot trim an empty series");
    const double t0 = series.time.front();
    const double t1 = series.time.back();
    if (!(t1 - t0 > trim_start + trim_end)) {
        throw DataError("series spans " + std::to_string(t1 - t0) +
                        " min, too short for trimming " + std::to_string(trim_start) + " + " +
                        std::to_string(trim_end) + " min");
    }
    RawSeries out;
    out.dropped_missing = series.dropped_missing;
    out.merged_duplicates = series.merged_duplicates;
    out.time_origin = series.time_origin;
    for (std::size_t i = 0; i < series.size(); ++i) {
        const double t = series.time[i];
        if (t >= t0 + trim_start && t <= t1 - trim_end) {
            out.time.push_back(t);
            out.value.push_back(series.value[i]);
        }
    }
    return out;
}

void Dataset::validate() const {
    if (x.size() != y.size()) throw DataError("dataset x and y lengths differ");
    if (x.empty()) throw DataError("dataset is empty");
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] >= 0.0 && x[i] <= 1.0)) throw DataError("dataset x outside [0,1]");
        if (i > 0 && x[i] < x[i - 1]) throw DataError("dataset x is not nondecreasing");
    }
    if (!(scaling.y_sd > 0.0)) throw DataError("scaling y_sd must be positive");
    if (!(scaling.x_max > scaling.x_min)) throw DataError("scaling x_max must exceed x_min");
}

Dataset standardize(const RawSeries& series, const StandardizeOptions& options) {
    const std::size_t n = series.size();
    if (n < 3) throw DataError("need at least 3 observations, got " + std::to_string(n));
    if (series.value.size() != n) throw DataError("series time/value lengths differ");
    const double y_mean = mean_of(series.value);
    double ss = 0.0;
    for (double v : series.value) ss += (v - y_mean) * (v - y_mean);
    const double y_sd = std::sqrt(ss / static_cast<double>(n - 1));
    if (!(y_sd > 0.0) || y_sd < 1e-12 * std::max(1.0, std::abs(y_mean))) {
        throw DataError("degenerate series: outcome has zero variance");
    }
    const auto [tmin_it, tmax_it] = std::minmax_element(series.time.begin(), series.time.end());
    const double x_min = options.x_lower.value_or(*tmin_it);
    const double x_max = options.x_upper.value_or(*tmax_it);
    if (!(x_max > x_min)) throw DataError("degenerate series: time range is zero");

    Dataset d;
    d.scaling = ScalingInfo{y_mean, y_sd, x_min, x_max, options.trim_start, options.trim_end};
    d.filter_mass = options.filter_mass;
    d.flow_rate = options.flow_rate;
    d.x.resize(n);
    d.y.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        double u = (series.time[i] - x_min) / (x_max - x_min);
        if (u < 0.0 && u > -1e-12) u = 0.0;
        if (u > 1.0 && u < 1.0 + 1e-12) u = 1.0;
        d.x[i] = u;
        d.y[i] = (series.value[i] - y_mean) / y_sd;
    }
    // Pin endpoints exactly when the range is data-derived.
    if (!options.x_lower) d.x[static_cast<std::size_t>(tmin_it - series.time.begin())] = 0.0;
    if (!options.x_upper) d.x[static_cast<std::size_t>(tmax_it - series.time.begin())] = 1.0;
    d.validate();
    const double m = mean_of(d.y);
    double s2 = 0.0;
    for (double v : d.y) s2 += (v - m) * (v - m);
    if (std::abs(m) > 1e-10 || std::abs(std::sqrt(s2 / static_cast<double>(n - 1)) - 1.0) > 1e-10) {
        throw DataError("standardization lost precision; rescale the input values");
    }
    return d;
}

RawSeries destandardize(const Dataset& data) {
    RawSeries s;
    s.time.reserve(data.size());
    s.value.reserve(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        s.time.push_back(data.scaling.to_original_x(data.x[i]));
        s.value.push_back(data.scaling.to_original_y(data.y[i]));
    }
    return s;
}

Dataset subset(const Dataset& data, const std::vector<std::size_t>& indices) {
    std::vector<std::size_t> idx = indices;
    std::sort(idx.begin(), idx.end());
    Dataset out;
    out.scaling = data.scaling;
    out.filter_mass = data.filter_mass;
    out.flow_rate = data.flow_rate;
    for (auto i : idx) {
        out.x.push_back(data.x.at(i));
        out.y.push_back(data.y.at(i));
    }
    return out;
}

}  // namespace bnmr
