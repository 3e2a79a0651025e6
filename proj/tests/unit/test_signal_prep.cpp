#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <numeric>
#include <set>

#include "afibkit/error.hpp"
#include "afibkit/signal_prep.hpp"
#include "support/synth.hpp"

using namespace afibkit;
using namespace afibkit::prep;

namespace {

wfdb::Record two_channel_record(std::vector<int> ch0, std::vector<int> ch1, double gain = 200.0) {
  wfdb::Record r;
  r.header.record_name = "t";
  r.header.num_signals = 2;
  r.header.num_samples = ch0.size();
  r.header.signals.resize(2);
  for (auto& s : r.header.signals) s.gain = gain;
  r.channels = {std::move(ch0), std::move(ch1)};
  return r;
}

std::vector<Segment> labeled(std::size_t pos, std::size_t neg) {
  std::vector<Segment> out;
  for (std::size_t i = 0; i < pos + neg; ++i) {
    Segment s;
    s.samples = {static_cast<double>(i)};
    s.label = i < pos ? 1 : 0;
    s.source = {"r", i};
    out.push_back(s);
  }
  return out;
}

}  // namespace

TEST(SelectChannel, MillivoltsAndRange) {
  const auto r = two_channel_record({200, -400}, {0, 100});
  EXPECT_EQ(select_channel(r, 0), (std::vector<double>{1.0, -2.0}));
  EXPECT_EQ(select_channel(r, 1), (std::vector<double>{0.0, 0.5}));
  try {
    select_channel(r, 2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kChannelOutOfRange);
  }
}

TEST(Downsample, IdentityAndDc) {
  const std::vector<double> x{1, 2, 3, 4, 5};
  const auto same = downsample(x, 1, 250.0);
  EXPECT_EQ(same.signal, x);
  EXPECT_DOUBLE_EQ(same.sampling_hz, 250.0);

  const std::vector<double> ones(301, 1.0);
  const auto d = downsample(ones, 2, 250.0);
  EXPECT_EQ(d.signal.size(), 151u);
  EXPECT_DOUBLE_EQ(d.sampling_hz, 125.0);
  for (double v : d.signal) EXPECT_NEAR(v, 1.0, 1e-12);
}

TEST(Downsample, FilterHasUnityGainAndSymmetry) {
  for (int f : {2, 3, 4}) {
    const auto h = decimation_filter(f);
    ASSERT_EQ(h.size(), kDownsampleTaps);
    EXPECT_NEAR(std::accumulate(h.begin(), h.end(), 0.0), 1.0, 1e-14);
    for (std::size_t i = 0; i < h.size(); ++i) EXPECT_DOUBLE_EQ(h[i], h[h.size() - 1 - i]);
  }
}

TEST(Downsample, TenHertzSineKeepsAmplitude) {
  // Oracle: the same sine sampled directly at the target rate.
  const double hz = 250.0;
  std::vector<double> x(2500);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::sin(2 * std::numbers::pi * 10.0 * i / hz);
  const auto d = downsample(x, 2, hz);
  double max_err = 0.0;
  for (std::size_t j = 20; j + 20 < d.signal.size(); ++j) {
    const double direct = std::sin(2 * std::numbers::pi * 10.0 * j / d.sampling_hz);
    max_err = std::max(max_err, std::abs(d.signal[j] - direct));
  }
  EXPECT_LT(max_err, 0.01);
}

TEST(Downsample, OutputLengthIsCeil) {
  for (std::size_t n : {1u, 2u, 7u, 100u, 101u}) {
    EXPECT_EQ(downsample(std::vector<double>(n, 0.5), 3, 300.0).signal.size(), (n + 2) / 3);
  }
}

TEST(AddNoise, IdentityWhenDisabled) {
  const std::vector<double> x{1, -2, 3};
  EXPECT_EQ(add_noise(x, std::nullopt, 0.0, 9, 250.0), x);
}

TEST(AddNoise, MeasuredSnr) {
  std::vector<double> x(20000);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::sqrt(2.0) * std::sin(0.05 * static_cast<double>(i));
  double p_sig = 0.0;
  for (double v : x) p_sig += v * v;
  p_sig /= static_cast<double>(x.size());
  const auto y = add_noise(x, 10.0, 0.0, 1234, 250.0);
  double p_noise = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) p_noise += (y[i] - x[i]) * (y[i] - x[i]);
  p_noise /= static_cast<double>(x.size());
  EXPECT_NEAR(10.0 * std::log10(p_sig / p_noise), 10.0, 0.5);
}

TEST(AddNoise, WanderAmplitudeAndDeterminism) {
  const std::vector<double> x(5000, 2.0);  // RMS 2
  const auto y = add_noise(x, std::nullopt, 0.1, 5, 250.0);
  double peak = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) peak = std::max(peak, std::abs(y[i] - x[i]));
  EXPECT_NEAR(peak, 0.2, 1e-3);
  EXPECT_EQ(add_noise(x, 12.0, 0.1, 77, 250.0), add_noise(x, 12.0, 0.1, 77, 250.0));
  EXPECT_NE(add_noise(x, 12.0, 0.1, 77, 250.0), add_noise(x, 12.0, 0.1, 78, 250.0));
}

TEST(AddNoise, ZeroRmsRejected) {
  try {
    add_noise(std::vector<double>(10, 0.0), 10.0, 0.0, 1, 250.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDegenerateSignal);
  }
}

TEST(SegmentRecord, LabelsByAfibFraction) {
  PrepConfig cfg;
  cfg.window_seconds = 1.0;
  std::vector<double> x(100);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::sin(0.3 * static_cast<double>(i));
  // Window [0,10) at 10 Hz: AFIB covers 6 of 10 samples.
  const std::vector<wfdb::RhythmInterval> iv{{0, 4, wfdb::Rhythm::kOther}, {4, 100, wfdb::Rhythm::kAfib}};
  cfg.label_threshold = 0.5;
  EXPECT_EQ(segment_record(x, iv, cfg, 10.0).front().label, 1);
  cfg.label_threshold = 0.75;
  EXPECT_EQ(segment_record(x, iv, cfg, 10.0).front().label, 0);
  // Later windows lie wholly inside AFIB.
  EXPECT_EQ(segment_record(x, iv, cfg, 10.0).back().label, 1);
}

TEST(SegmentRecord, CountsNormalizationAndDrops) {
  PrepConfig cfg;
  cfg.window_seconds = 2.0;
  const double hz = 50.0;  // L = 100
  std::vector<double> x(250);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = 3.0 + std::cos(0.2 * static_cast<double>(i));
  const std::vector<wfdb::RhythmInterval> iv{{0, 250, wfdb::Rhythm::kOther}};
  const auto segs = segment_record(x, iv, cfg, hz, "rec", 2);
  ASSERT_EQ(segs.size(), 2u);
  for (const auto& s : segs) {
    ASSERT_EQ(s.samples.size(), 100u);
    const double mean = std::accumulate(s.samples.begin(), s.samples.end(), 0.0) / 100.0;
    double var = 0.0;
    for (double v : s.samples) var += (v - mean) * (v - mean);
    EXPECT_LT(std::abs(mean), 1e-9);
    EXPECT_NEAR(var / 100.0, 1.0, 1e-6);
    EXPECT_DOUBLE_EQ(s.effective_hz, hz);
  }
  EXPECT_EQ(segs[1].source, (SegmentSource{"rec", 200}));

  std::fill(x.begin(), x.begin() + 100, 1.0);
  EXPECT_EQ(segment_record(x, iv, cfg, hz).size(), 1u);
}

TEST(PrepConfig, Validation) {
  PrepConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.label_threshold = 0.0;
  EXPECT_THROW(cfg.validate(), Error);
  cfg = {};
  cfg.downsample_factor = 0;
  EXPECT_THROW(cfg.validate(), Error);
  cfg = {};
  cfg.window_seconds = -1;
  EXPECT_THROW(cfg.validate(), Error);
}

TEST(SplitDataset, NinetyTen) {
  const auto split = split_dataset(labeled(50, 50), 0.9, 3);
  EXPECT_EQ(split.train.size(), 90u);
  EXPECT_EQ(split.test.size(), 10u);
  EXPECT_FALSE(split.warning);

  std::set<std::size_t> seen;
  for (const auto* part : {&split.train, &split.test})
    for (const auto& s : *part) EXPECT_TRUE(seen.insert(s.source.start_sample).second);
  EXPECT_EQ(seen.size(), 100u);

  const auto again = split_dataset(labeled(50, 50), 0.9, 3);
  for (std::size_t i = 0; i < 10; ++i) EXPECT_EQ(again.test[i].source, split.test[i].source);
}

TEST(SplitDataset, EdgeCases) {
  const auto split = split_dataset(labeled(1, 1), 0.9, 1);
  EXPECT_EQ(split.train.size(), 2u);
  EXPECT_TRUE(split.test.empty());
  EXPECT_TRUE(split.warning.has_value());
  try {
    split_dataset(labeled(1, 0), 0.9, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyDataset);
  }
}

TEST(BalanceClasses, Undersamples) {
  auto out = balance_classes(labeled(150, 50), 4);
  EXPECT_EQ(std::count_if(out.begin(), out.end(), [](auto& s) { return s.label == 1; }), 50);
  EXPECT_EQ(std::count_if(out.begin(), out.end(), [](auto& s) { return s.label == 0; }), 50);

  out = balance_classes(labeled(50, 50), 4);
  ASSERT_EQ(out.size(), 100u);
  for (std::size_t i = 0; i < out.size(); ++i) EXPECT_EQ(out[i].source.start_sample, i);

  EXPECT_EQ(balance_classes(labeled(50, 50), 4, 10).size(), 20u);
  try {
    balance_classes(labeled(0, 5), 4);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kSingleClass);
  }
}

TEST(SegmentsFromRecord, DeterministicAndLabelInvariant) {
  afibkit::testing::TempDir tmp("prep");
  const auto path = afibkit::testing::write_synthetic_record(tmp.path(), "p", {{false, 40}, {true, 40}}, 250.0, 2);
  const auto rec = wfdb::load_record(path);
  const auto iv = wfdb::rhythm_intervals(wfdb::load_annotations(path, 250.0), rec.header.num_samples);

  PrepConfig cfg;
  const auto a = segments_from_record(rec, iv, cfg);
  const auto b = segments_from_record(rec, iv, cfg);
  ASSERT_EQ(a.size(), 8u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].samples, b[i].samples);
    EXPECT_EQ(a[i].samples.size(), 1250u);
    EXPECT_EQ(a[i].label, i >= 4 ? 1 : 0);
  }

  PrepConfig clean = cfg;
  clean.noise_snr_db.reset();
  clean.wander_amplitude = 0.0;
  clean.downsample_factor = 1;
  const auto c = segments_from_record(rec, iv, clean);
  ASSERT_EQ(c.size(), a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(c[i].label, a[i].label);
    EXPECT_EQ(c[i].source, a[i].source);
  }
}

TEST(DeriveSeed, StableAndDistinct) {
  EXPECT_EQ(derive_seed(42, "04015"), derive_seed(42, "04015"));
  EXPECT_NE(derive_seed(42, "04015"), derive_seed(42, "04048"));
  EXPECT_NE(derive_seed(42, "04015"), derive_seed(43, "04015"));
}
