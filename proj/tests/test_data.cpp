#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "fixtures.hpp"
#include "plfl/data.hpp"

using namespace plfl;

namespace {

std::string fixture(const std::string& name) { return std::string(PLFL_TEST_DATA) + "/" + name; }

std::string error_of(const std::string& path) {
  try {
    load_csv(path);
  } catch (const DataError& e) {
    return e.what();
  }
  return "";
}

ClientSeries ramp(std::size_t n, double slope = 1.0) {
  ClientSeries s;
  for (std::size_t t = 0; t < n; ++t) {
    s.push(static_cast<std::int64_t>(t) * kCadenceMinutes, 10.0 + slope * static_cast<double>(t), 5.0 + 0.1 * t,
           2.0, 100, 60, 15);
  }
  return s;
}

double sample_std(const std::vector<double>& v) {
  double m = 0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  double ss = 0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

std::vector<double> client_means(const std::vector<ClientSeries>& set) {
  std::vector<double> out;
  for (const auto& s : set) {
    double m = 0;
    for (double y : s.load) m += y;
    out.push_back(m / static_cast<double>(s.size()));
  }
  return out;
}

}  // namespace

TEST(LoadCsv, WellFormedEightRows) {
  const auto s = load_csv(fixture("well_formed.csv"));
  ASSERT_EQ(s.size(), 8u);
  EXPECT_EQ(s.name, "well_formed");
  EXPECT_EQ(s.load[1], 43.25);
  // 2018-03-05 is a Monday; first row is 22:00.
  EXPECT_EQ(s.features[0][0], 22.0 / 23.0);
  EXPECT_EQ(s.features[0][1], 0.0);
  EXPECT_EQ(s.features[7][0], 1.0);
  EXPECT_EQ(s.features[0][2], 11.5);
  EXPECT_EQ(s.features[0][6], 630.0);
}

TEST(LoadCsv, SkippedTimestampNamesGap) {
  const auto msg = error_of(fixture("gap.csv"));
  EXPECT_NE(msg.find("cadence"), std::string::npos) << msg;
  EXPECT_NE(msg.find("2018-03-05T23:00:00"), std::string::npos) << msg;
  EXPECT_NE(msg.find("2018-03-05T23:30:00"), std::string::npos) << msg;
  EXPECT_NE(msg.find("gap.csv:7"), std::string::npos) << msg;
}

TEST(LoadCsv, MissingColumnIsSchemaError) {
  const auto msg = error_of(fixture("missing_column.csv"));
  EXPECT_NE(msg.find("window_area"), std::string::npos) << msg;
}

TEST(LoadCsv, NanLoadReportsRow) {
  const auto msg = error_of(fixture("nan_load.csv"));
  EXPECT_NE(msg.find("nan_load.csv:5"), std::string::npos) << msg;
  EXPECT_NE(msg.find("load"), std::string::npos) << msg;
}

TEST(LoadCsv, MissingFile) { EXPECT_THROW(load_csv(fixture("does_not_exist.csv")), DataError); }

TEST(LoadCsv, WriteReadRoundTrip) {
  SyntheticSpec spec;
  spec.clients = 1;
  spec.length = 2 * kStepsPerWeek;
  const auto s = generate_synthetic(spec, 4)[0];
  std::stringstream buf;
  write_csv(buf, s);
  const auto back = parse_csv(buf, "mem");
  EXPECT_EQ(back.load, s.load);
  EXPECT_EQ(back.minutes, s.minutes);
  EXPECT_EQ(back.features, s.features);
}

TEST(Timestamp, CivilRoundTrip) {
  EXPECT_EQ(timestamp::parse_minutes("1970-01-01T00:00:00"), 0);
  EXPECT_EQ(timestamp::parse_minutes("2018-01-01 00:15"), timestamp::days_from_civil(2018, 1, 1) * 1440 + 15);
  const auto m = timestamp::parse_minutes("2024-02-29T13:45:00Z");
  EXPECT_EQ(timestamp::format_minutes(m), "2024-02-29T13:45:00");
  EXPECT_EQ(timestamp::hour_of_day(m), 13);
  EXPECT_EQ(timestamp::day_of_week(m), 3);  // Thursday
  EXPECT_THROW(timestamp::parse_minutes("2024-13-01T00:00:00"), DataError);
  EXPECT_THROW(timestamp::parse_minutes("yesterday"), DataError);
}

TEST(SplitAndWindow, LengthHundredGivesSixtyFiveTrainWindows) {
  const auto d = split_and_window(ramp(100), SplitSpec{}, 12, 4);
  EXPECT_EQ(d.train.size(), 65u);
  EXPECT_EQ(d.val.size(), 0u);
  EXPECT_EQ(d.test.size(), 0u);
}

TEST(SplitAndWindow, WindowCountFormula) {
  const auto d = split_and_window(ramp(1000), SplitSpec{}, 12, 4);
  EXPECT_EQ(d.train.size(), 800u - 16 + 1);
  EXPECT_EQ(d.val.size(), 100u - 16 + 1);
  EXPECT_EQ(d.test.size(), 100u - 16 + 1);
}

TEST(SplitAndWindow, TooShortTrainSplitThrows) {
  EXPECT_THROW(split_and_window(ramp(20), SplitSpec{}, 12, 4), DataError);
  EXPECT_NO_THROW(split_and_window(ramp(22), SplitSpec{}, 12, 4));
  EXPECT_THROW(split_and_window(ramp(100), SplitSpec{0.5, 0.5, 0.5}, 12, 4), std::invalid_argument);
}

TEST(SplitAndWindow, ConstantSeriesNormalizesToZero) {
  const auto d = split_and_window(ramp(200, 0.0), SplitSpec{}, 4, 2);
  EXPECT_EQ(d.train.stats().load_std, kStdFloor);
  for (std::size_t i = 0; i < d.train.size(); ++i) {
    EXPECT_EQ(d.train.label(i), 0.0);
    for (std::size_t t = 0; t < 4; ++t) EXPECT_EQ(d.train.input(i).step(t)[0], 0.0);
  }
}

TEST(SplitAndWindow, NoLeakageAcrossSplits) {
  const auto s = ramp(500);
  const auto d = split_and_window(s, SplitSpec{}, 12, 4);
  const auto last_train = d.train.minutes().back();
  EXPECT_LT(last_train, d.val.minutes().front());
  EXPECT_LT(d.val.minutes().back(), d.test.minutes().front());
  for (const auto* w : {&d.train, &d.val, &d.test}) {
    for (std::size_t i = 0; i < w->size(); ++i) {
      EXPECT_GE(w->input_minute(i), w->minutes().front());
      EXPECT_LE(w->label_minute(i), w->minutes().back());
    }
  }
  // Stats use the train split only: the ramp's train mean is the midpoint of steps 0..399.
  EXPECT_DOUBLE_EQ(d.test.stats().load_mean, 10.0 + 199.5);
}

TEST(SplitAndWindow, LabelAlignment) {
  const auto s = ramp(300);
  const auto d = split_and_window(s, SplitSpec{}, 12, 4);
  for (const auto* w : {&d.train, &d.val, &d.test}) {
    for (std::size_t i = 0; i < w->size(); ++i) {
      EXPECT_EQ(w->label_step(i), i + 12 + 4 - 1);
      EXPECT_EQ(w->raw_label(i), s.load[w->offset() + i + 15]);
      EXPECT_EQ(w->label_minute(i) - w->input_minute(i), 15 * kCadenceMinutes);
    }
  }
}

TEST(SplitAndWindow, ScoredActualsCarryLagHistory) {
  const auto d = split_and_window(ramp(300), SplitSpec{}, 12, 4);
  const auto a = d.val.scored_actuals();
  ASSERT_EQ(a.size(), d.val.size() + 4);
  for (std::size_t i = 0; i < d.val.size(); ++i) EXPECT_EQ(a[i + 4], d.val.raw_label(i));
}

TEST(Normalization, RoundTrip) {
  const auto d = split_and_window(generate_synthetic(SyntheticSpec{}, 3)[0], SplitSpec{}, 12, 4);
  const auto& st = d.train.stats();
  for (double y : {-3.0, 0.0, 17.25, 1234.5}) EXPECT_NEAR(st.denormalize_load(st.normalize_load(y)), y, 1e-12);
  for (std::size_t i = 0; i < 20; ++i) {
    EXPECT_NEAR(st.denormalize_load(d.val.label(i)), d.val.raw_label(i), 1e-12);
  }
}

TEST(Synthetic, ZeroSpreadsAreHomogeneous) {
  SyntheticSpec spec;
  spec.scale_spread = spec.offset_spread = spec.phase_spread = 0.0;
  const auto set = generate_synthetic(spec, 1);
  const auto means = client_means(set);
  // Noise sigma is 2 over 2688 points: sd of the mean is about 0.04.
  for (double m : means) EXPECT_NEAR(m, means[0], 0.5);
}

TEST(Synthetic, ScaleSpreadRaisesHeterogeneity) {
  SyntheticSpec homogeneous;
  homogeneous.scale_spread = homogeneous.offset_spread = homogeneous.phase_spread = 0.0;
  SyntheticSpec spread;
  spread.scale_spread = 1.0;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    EXPECT_GT(sample_std(client_means(generate_synthetic(spread, seed))),
              10.0 * sample_std(client_means(generate_synthetic(homogeneous, seed))));
  }
}

TEST(Synthetic, Deterministic) {
  const auto a = generate_synthetic(SyntheticSpec{}, 7);
  const auto b = generate_synthetic(SyntheticSpec{}, 7);
  ASSERT_EQ(a.size(), 12u);
  for (std::size_t c = 0; c < a.size(); ++c) {
    EXPECT_EQ(a[c].load, b[c].load);
    EXPECT_EQ(a[c].features, b[c].features);
  }
  EXPECT_NE(generate_synthetic(SyntheticSpec{}, 8)[0].load, a[0].load);
}

TEST(Synthetic, StaticFeaturesConstantPerClient) {
  const auto set = generate_synthetic(SyntheticSpec{}, 2);
  for (const auto& s : set) {
    for (const auto& f : s.features) {
      EXPECT_EQ(f[4], s.features[0][4]);
      EXPECT_EQ(f[5], s.features[0][5]);
      EXPECT_EQ(f[6], s.features[0][6]);
    }
  }
}

TEST(Synthetic, InvalidSpecsRejected) {
  SyntheticSpec spec;
  spec.scale_spread = -1.0;
  EXPECT_THROW(generate_synthetic(spec, 0), std::invalid_argument);
  spec = SyntheticSpec{};
  spec.length = kStepsPerWeek;
  EXPECT_THROW(generate_synthetic(spec, 0), std::invalid_argument);
  spec = SyntheticSpec{};
  spec.phase_spread = std::nan("");
  EXPECT_THROW(generate_synthetic(spec, 0), std::invalid_argument);
}
