#pragma once

// Client load series: CSV ingestion, synthetic generation, chronological
// splitting, per-client normalization and look-back/look-ahead windowing.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "plfl/model.hpp"
#include "plfl/numerics.hpp"

namespace plfl {

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::size_t kFeatureCount = 7;
inline constexpr std::int64_t kCadenceMinutes = 15;
inline constexpr std::size_t kStepsPerDay = 96;
inline constexpr std::size_t kStepsPerWeek = 7 * kStepsPerDay;

/// CSV header, in order. Hour-of-day and day-of-week are derived from the
/// timestamp and become the first two feature channels.
inline const std::array<std::string, 7> kCsvColumns = {
    "timestamp", "load", "temperature", "windspeed", "floor_area", "wall_area", "window_area"};

/// Feature channels: hour/23, weekday/6 (Monday = 0), then the five exogenous columns.
inline const std::array<std::string, kFeatureCount> kFeatureNames = {
    "hour_of_day", "day_of_week", "temperature", "windspeed", "floor_area", "wall_area", "window_area"};

/// Channels z-scored with train statistics (the calendar indices are already in [0, 1]).
inline constexpr std::array<bool, kFeatureCount> kNormalizedFeature = {false, false, true, true,
                                                                       true,  true,  true};

namespace timestamp {

// Days since 1970-01-01 for a proleptic Gregorian date.
inline std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

inline void civil_from_days(std::int64_t z, std::int64_t& y, unsigned& m, unsigned& d) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  y = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = doy - (153 * mp + 2) / 5 + 1;
  m = mp < 10 ? mp + 3 : mp - 9;
  y += m <= 2;
}

/// Parses "YYYY-MM-DDTHH:MM[:SS][Z]" (a space separator is accepted) into
/// minutes since the Unix epoch. Seconds must be zero.
inline std::int64_t parse_minutes(const std::string& s) {
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, sec = 0;
  char sep = 0;
  int consumed = 0;
  const int n = std::sscanf(s.c_str(), "%4d-%2d-%2d%c%2d:%2d%n", &y, &mo, &d, &sep, &h, &mi, &consumed);
  if (n < 6 || (sep != 'T' && sep != ' ')) throw DataError("malformed timestamp '" + s + "'");
  std::string rest = s.substr(static_cast<std::size_t>(consumed));
  if (!rest.empty() && rest[0] == ':') {
    if (std::sscanf(rest.c_str(), ":%2d", &sec) != 1) throw DataError("malformed timestamp '" + s + "'");
    rest = rest.substr(3);
  }
  if (!(rest.empty() || rest == "Z")) throw DataError("malformed timestamp '" + s + "'");
  if (mo < 1 || mo > 12 || d < 1 || d > 31 || h > 23 || mi > 59 || sec != 0) {
    throw DataError("timestamp out of range '" + s + "'");
  }
  return days_from_civil(y, static_cast<unsigned>(mo), static_cast<unsigned>(d)) * 1440 + h * 60 + mi;
}

inline std::string format_minutes(std::int64_t minutes) {
  std::int64_t days = minutes >= 0 ? minutes / 1440 : (minutes - 1439) / 1440;
  const std::int64_t in_day = minutes - days * 1440;
  std::int64_t y;
  unsigned m, d;
  civil_from_days(days, y, m, d);
  std::ostringstream os;
  os << std::setfill('0') << std::setw(4) << y << '-' << std::setw(2) << m << '-' << std::setw(2) << d
     << 'T' << std::setw(2) << in_day / 60 << ':' << std::setw(2) << in_day % 60 << ":00";
  return os.str();
}

inline int hour_of_day(std::int64_t minutes) {
  const std::int64_t in_day = ((minutes % 1440) + 1440) % 1440;
  return static_cast<int>(in_day / 60);
}

/// Monday = 0 ... Sunday = 6.
inline int day_of_week(std::int64_t minutes) {
  const std::int64_t days = minutes >= 0 ? minutes / 1440 : (minutes - 1439) / 1440;
  return static_cast<int>(((days + 3) % 7 + 7) % 7);
}

}  // namespace timestamp

struct ClientSeries {
  std::string name;
  std::vector<std::int64_t> minutes;
  std::vector<double> load;
  std::vector<std::array<double, kFeatureCount>> features;

  std::size_t size() const { return load.size(); }

  void push(std::int64_t minute, double y, double temperature, double windspeed, double floor_area,
            double wall_area, double window_area) {
    minutes.push_back(minute);
    load.push_back(y);
    features.push_back({timestamp::hour_of_day(minute) / 23.0, timestamp::day_of_week(minute) / 6.0,
                        temperature, windspeed, floor_area, wall_area, window_area});
  }
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) {
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? std::string() : cell.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline double parse_number(const std::string& s, const std::string& where) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw DataError(where + ": not a number '" + s + "'");
  }
}

}  // namespace detail

/// Reads one client's series. `source` is used in error messages.
inline ClientSeries parse_csv(std::istream& in, const std::string& source) {
  std::string line;
  if (!std::getline(in, line)) throw DataError(source + ": empty file");
  const auto header = detail::split_csv_line(line);
  std::string missing;
  for (const auto& col : kCsvColumns) {
    if (std::find(header.begin(), header.end(), col) == header.end()) missing += (missing.empty() ? "" : ", ") + col;
  }
  if (!missing.empty()) throw DataError(source + ": schema error: missing column(s) " + missing);
  if (header.size() != kCsvColumns.size()) {
    throw DataError(source + ": schema error: expected " + std::to_string(kCsvColumns.size()) +
                    " columns (timestamp, load and 5 exogenous) giving d=" + std::to_string(kFeatureCount) +
                    " features, found " + std::to_string(header.size()) + " columns");
  }
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] != kCsvColumns[i]) {
      throw DataError(source + ": schema error: column " + std::to_string(i + 1) + " is '" + header[i] +
                      "', expected '" + kCsvColumns[i] + "'");
    }
  }

  ClientSeries series;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = source + ":" + std::to_string(row);
    const auto cells = detail::split_csv_line(line);
    if (cells.size() != kCsvColumns.size()) {
      throw DataError(where + ": expected " + std::to_string(kCsvColumns.size()) + " fields, found " +
                      std::to_string(cells.size()));
    }
    std::int64_t minute = 0;
    try {
      minute = timestamp::parse_minutes(cells[0]);
    } catch (const DataError& e) {
      throw DataError(where + ": " + e.what());
    }
    std::array<double, 6> v{};
    for (std::size_t k = 0; k < 6; ++k) {
      v[k] = detail::parse_number(cells[k + 1], where);
      if (!std::isfinite(v[k])) throw DataError(where + ": missing or non-finite " + kCsvColumns[k + 1]);
    }
    if (!series.minutes.empty()) {
      const std::int64_t prev = series.minutes.back();
      if (minute - prev != kCadenceMinutes) {
        throw DataError(where + ": cadence error: gap from " + timestamp::format_minutes(prev) + " to " +
                        cells[0] + " (expected " + std::to_string(kCadenceMinutes) + " minutes)");
      }
    }
    series.push(minute, v[0], v[1], v[2], v[3], v[4], v[5]);
  }
  if (series.size() == 0) throw DataError(source + ": no data rows");
  return series;
}

inline ClientSeries load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  auto series = parse_csv(in, path);
  const auto slash = path.find_last_of('/');
  std::string stem = slash == std::string::npos ? path : path.substr(slash + 1);
  if (const auto dot = stem.rfind('.'); dot != std::string::npos) stem.resize(dot);
  series.name = stem;
  return series;
}

inline void write_csv(std::ostream& out, const ClientSeries& s) {
  for (std::size_t i = 0; i < kCsvColumns.size(); ++i) out << (i ? "," : "") << kCsvColumns[i];
  out << '\n';
  out << std::setprecision(17);
  for (std::size_t t = 0; t < s.size(); ++t) {
    out << timestamp::format_minutes(s.minutes[t]) << ',' << s.load[t];
    for (std::size_t k = 2; k < kFeatureCount; ++k) out << ',' << s.features[t][k];
    out << '\n';
  }
}

inline void write_csv(const std::string& path, const ClientSeries& s) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  write_csv(out, s);
  if (!out) throw DataError("write failed for " + path);
}

struct SplitSpec {
  double train = 0.8;
  double val = 0.1;
  double test = 0.1;

  void validate() const {
    if (!(train > 0 && val > 0 && test > 0)) throw std::invalid_argument("split fractions must be positive");
    if (std::abs(train + val + test - 1.0) > 1e-9) throw std::invalid_argument("split fractions must sum to 1");
  }
  bool operator==(const SplitSpec&) const = default;
};

inline constexpr double kStdFloor = 1e-8;

/// Per-channel z-score statistics computed on a client's train split.
struct NormalizationStats {
  double load_mean = 0.0;
  double load_std = 1.0;
  std::array<double, kFeatureCount> feature_mean{};
  std::array<double, kFeatureCount> feature_std{1, 1, 1, 1, 1, 1, 1};

  double normalize_load(double y) const { return (y - load_mean) / load_std; }
  double denormalize_load(double z) const { return z * load_std + load_mean; }
  double normalize_feature(std::size_t k, double v) const {
    return (v - feature_mean[k]) / feature_std[k];
  }

  static NormalizationStats fit(const ClientSeries& s, std::size_t begin, std::size_t end) {
    // Shifted two-pass moments: exact mean and zero spread for constant channels.
    auto moments = [&](auto get) {
      const double pivot = get(begin);
      double sum = 0.0;
      for (std::size_t t = begin; t < end; ++t) sum += get(t) - pivot;
      const double n = static_cast<double>(end - begin);
      const double mean = pivot + sum / n;
      double ss = 0.0;
      for (std::size_t t = begin; t < end; ++t) {
        const double d = get(t) - mean;
        ss += d * d;
      }
      return std::pair{mean, std::max(std::sqrt(ss / n), kStdFloor)};
    };
    NormalizationStats st;
    std::tie(st.load_mean, st.load_std) = moments([&](std::size_t t) { return s.load[t]; });
    for (std::size_t k = 0; k < kFeatureCount; ++k) {
      if (!kNormalizedFeature[k]) continue;
      std::tie(st.feature_mean[k], st.feature_std[k]) =
          moments([&](std::size_t t) { return s.features[t][k]; });
    }
    return st;
  }
};

/// Supervised windows over one contiguous split of a client series.
/// Window i uses steps [i, i + T) as input and step i + T + L - 1 as label.
class WindowedDataset {
 public:
  WindowedDataset() = default;

  WindowedDataset(const ClientSeries& s, std::size_t begin, std::size_t end, std::size_t lookback,
                  std::size_t lookahead, NormalizationStats stats)
      : lookback_(lookback), lookahead_(lookahead), begin_(begin), stats_(stats) {
    if (end > s.size() || begin > end) throw std::out_of_range("split range outside series");
    if (lookback == 0 || lookahead == 0) throw std::invalid_argument("lookback and lookahead must be >= 1");
    const std::size_t len = end - begin;
    count_ = len >= lookback + lookahead ? len - lookback - lookahead + 1 : 0;
    rows_.reserve(len * width());
    for (std::size_t t = begin; t < end; ++t) {
      rows_.push_back(stats_.normalize_load(s.load[t]));
      for (std::size_t k = 0; k < kFeatureCount; ++k) rows_.push_back(stats_.normalize_feature(k, s.features[t][k]));
      raw_loads_.push_back(s.load[t]);
      minutes_.push_back(s.minutes[t]);
    }
  }

  std::size_t size() const { return count_; }
  bool empty() const { return count_ == 0; }
  std::size_t lookback() const { return lookback_; }
  std::size_t lookahead() const { return lookahead_; }
  std::size_t width() const { return 1 + kFeatureCount; }
  /// Index of the split's first step within the source series.
  std::size_t offset() const { return begin_; }
  const NormalizationStats& stats() const { return stats_; }

  ForecastInput input(std::size_t i) const {
    check(i);
    return {std::span<const double>(rows_).subspan(i * width(), lookback_ * width()), lookback_, width()};
  }
  std::size_t label_step(std::size_t i) const { return i + lookback_ + lookahead_ - 1; }
  double label(std::size_t i) const {
    check(i);
    return rows_[label_step(i) * width()];
  }
  double raw_label(std::size_t i) const {
    check(i);
    return raw_loads_[label_step(i)];
  }
  std::int64_t label_minute(std::size_t i) const { return minutes_[label_step(i)]; }
  std::int64_t input_minute(std::size_t i) const { return minutes_[i]; }

  /// Raw loads from the first lag-L reference of window 0 through the last
  /// label: the actuals series MASE scores against, with L steps of history.
  std::vector<double> scored_actuals() const {
    if (count_ == 0) return {};
    return {raw_loads_.begin() + static_cast<std::ptrdiff_t>(lookback_ - 1), raw_loads_.end()};
  }

  std::span<const double> raw_loads() const { return raw_loads_; }
  std::span<const std::int64_t> minutes() const { return minutes_; }

 private:
  void check(std::size_t i) const {
    if (i >= count_) throw std::out_of_range("window index out of range");
  }

  std::size_t lookback_ = 0;
  std::size_t lookahead_ = 0;
  std::size_t begin_ = 0;
  std::size_t count_ = 0;
  NormalizationStats stats_;
  std::vector<double> rows_;
  std::vector<double> raw_loads_;
  std::vector<std::int64_t> minutes_;
};

struct DatasetSplits {
  WindowedDataset train;
  WindowedDataset val;
  WindowedDataset test;
};

/// Chronological train/val/test split with train-only normalization stats.
/// The train split must be longer than lookback + lookahead; shorter val/test
/// splits yield zero windows.
inline DatasetSplits split_and_window(const ClientSeries& s, const SplitSpec& spec, std::size_t lookback,
                                      std::size_t lookahead) {
  spec.validate();
  const std::size_t n = s.size();
  const auto n_train = static_cast<std::size_t>(std::floor(spec.train * static_cast<double>(n) + 1e-9));
  const auto n_val = static_cast<std::size_t>(std::floor(spec.val * static_cast<double>(n) + 1e-9));
  if (n_train <= lookback + lookahead) {
    throw DataError("series '" + s.name + "' too short: train split has " + std::to_string(n_train) +
                    " steps, needs more than lookback + lookahead = " +
                    std::to_string(lookback + lookahead));
  }
  const auto stats = NormalizationStats::fit(s, 0, n_train);
  return {WindowedDataset(s, 0, n_train, lookback, lookahead, stats),
          WindowedDataset(s, n_train, n_train + n_val, lookback, lookahead, stats),
          WindowedDataset(s, n_train + n_val, n, lookback, lookahead, stats)};
}

struct SyntheticSpec {
  std::size_t clients = 12;
  std::size_t length = 4 * kStepsPerWeek;
  double scale_spread = 0.5;
  double offset_spread = 0.3;
  double phase_spread = 1.0;
  std::int64_t start_minute = timestamp::days_from_civil(2018, 1, 1) * 1440;

  void validate() const {
    if (clients == 0) throw std::invalid_argument("synthetic: clients must be >= 1");
    if (length < 2 * kStepsPerWeek) {
      throw std::invalid_argument("synthetic: length must cover at least two weeks (" +
                                  std::to_string(2 * kStepsPerWeek) + " steps)");
    }
    for (double v : {scale_spread, offset_spread, phase_spread}) {
      if (!std::isfinite(v) || v < 0.0) throw std::invalid_argument("synthetic: spreads must be finite and >= 0");
    }
    if (phase_spread > 1.0) throw std::invalid_argument("synthetic: phase_spread must lie in [0, 1]");
  }
  bool operator==(const SyntheticSpec&) const = default;
};

/// Heterogeneous commercial-building loads:
///   y_t = a_c + b_c sin(2 pi t / 96 + phi_c) + e_c sin(2 pi t / 672) + sigma_c n_t
/// with per-client scale exp(scale_spread * N), offset, amplitudes and phase
/// phi_c = phase_spread * U(-pi, pi). All spreads at zero gives identical
/// clients up to the noise draw.
inline std::vector<ClientSeries> generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed) {
  spec.validate();
  constexpr double kPi = 3.14159265358979323846;
  std::vector<ClientSeries> out;
  out.reserve(spec.clients);
  for (std::size_t c = 0; c < spec.clients; ++c) {
    Rng rng(derive_seed(seed, 0x5eed5eedULL, c));
    const double scale = std::exp(spec.scale_spread * rng.normal());
    const double offset = 50.0 * scale * (1.0 + spec.offset_spread * rng.normal());
    const double daily = 20.0 * scale * std::exp(spec.scale_spread * rng.normal());
    const double weekly = 8.0 * scale * std::exp(spec.scale_spread * rng.normal());
    const double noise = 2.0 * scale;
    const double phase = spec.phase_spread * kPi * (2.0 * rng.uniform01() - 1.0);
    const double floor_area = 5000.0 * scale;
    const double wall_area = 0.6 * floor_area;
    const double window_area = 0.25 * wall_area;

    ClientSeries s;
    std::ostringstream name;
    name << "client_" << std::setfill('0') << std::setw(2) << c;
    s.name = name.str();
    for (std::size_t t = 0; t < spec.length; ++t) {
      const double day_angle = 2.0 * kPi * static_cast<double>(t) / kStepsPerDay + phase;
      const double week_angle = 2.0 * kPi * static_cast<double>(t) / kStepsPerWeek;
      const double y = offset + daily * std::sin(day_angle) + weekly * std::sin(week_angle) + noise * rng.normal();
      const double temperature = 15.0 + 8.0 * std::sin(day_angle - kPi / 2.0) + 1.5 * rng.normal();
      const double windspeed = std::max(0.0, 4.0 + 1.5 * std::sin(day_angle) + rng.normal());
      s.push(spec.start_minute + static_cast<std::int64_t>(t) * kCadenceMinutes, y, temperature, windspeed,
             floor_area, wall_area, window_area);
    }
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace plfl
