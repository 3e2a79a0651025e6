#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "afibkit/error.hpp"
#include "afibkit/rr_stats.hpp"
#include "afibkit/signal_prep.hpp"
#include "afibkit/wfdb.hpp"
#include "support/synth.hpp"

using namespace afibkit;
using namespace afibkit::rr;
namespace t = afibkit::testing;

TEST(DetectRPeaks, FlatSignalHasNoPeaks) {
  EXPECT_TRUE(detect_r_peaks(std::vector<double>(2500, 0.0), 250.0).indices.empty());
}

TEST(DetectRPeaks, TooShort) {
  try {
    detect_r_peaks(std::vector<double>(499, 0.0), 250.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kSignalTooShort);
  }
}

TEST(DetectRPeaks, ImpulseTrain) {
  std::vector<double> x(60 * 250, 0.0);
  for (std::size_t i = 125; i < x.size(); i += 250) x[i] = 1.0;
  const auto peaks = detect_r_peaks(x, 250.0);
  EXPECT_GE(peaks.indices.size(), 58u);
  EXPECT_LE(peaks.indices.size(), 60u);
  for (auto p : peaks.indices) EXPECT_EQ(p % 250, 125u);
}

TEST(DetectRPeaks, SyntheticEcgMatchesTruth) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    for (bool afib : {false, true}) {
      t::SynthParams p;
      p.seconds = 60;
      p.afib = afib;
      p.seed = seed;
      p.noise_mv = 0.03;
      const auto e = t::synth_ecg(p);
      const auto peaks = detect_r_peaks(e.mv, p.hz);
      const auto m = t::match_peaks(e.r_peaks, peaks.indices, static_cast<std::size_t>(0.05 * p.hz));
      EXPECT_GE(m.sensitivity(), 0.97) << "seed " << seed << " afib " << afib;
      EXPECT_GE(m.ppv(), 0.97) << "seed " << seed << " afib " << afib;
    }
  }
}

TEST(DetectRPeaks, RespectsRefractoryAndOrder) {
  t::SynthParams p;
  p.seconds = 60;
  p.afib = true;
  p.af_rr_lo = 0.25;
  p.noise_mv = 0.1;
  const auto e = t::synth_ecg(p);
  const auto peaks = detect_r_peaks(e.mv, p.hz);
  const auto min_gap = static_cast<std::size_t>(0.2 * p.hz);
  for (std::size_t i = 1; i < peaks.indices.size(); ++i) {
    EXPECT_GT(peaks.indices[i], peaks.indices[i - 1]);
    EXPECT_GE(peaks.indices[i] - peaks.indices[i - 1], min_gap);
  }
  for (auto idx : peaks.indices) EXPECT_LT(idx, e.mv.size());
}

TEST(DetectRPeaks, Record100FirstMinute) {
  const auto rec = wfdb::load_record(t::mitdb_dir() / "100");
  const auto ann = wfdb::load_annotations(t::mitdb_dir() / "100", rec.header.sampling_hz);
  const auto hz = rec.header.sampling_hz;
  const auto n = static_cast<std::size_t>(60 * hz);
  const auto mv = prep::select_channel(rec, 0);
  const auto peaks = detect_r_peaks(std::span(mv).first(n), hz);
  std::vector<std::size_t> ref;
  for (const auto& a : ann.annotations)
    if (t::is_beat_code(a.code) && a.sample_index < n) ref.push_back(a.sample_index);
  const auto m = t::match_peaks(ref, peaks.indices, static_cast<std::size_t>(0.150 * hz));
  EXPECT_GE(m.sensitivity(), 0.95);
  EXPECT_GE(m.ppv(), 0.95);
}

TEST(RrFromPeaks, Examples) {
  EXPECT_EQ(rr_from_peaks({{0, 200, 400}}, 250.0), (std::vector<double>{0.8, 0.8}));
  EXPECT_EQ(rr_from_peaks({{0, 250}}, 250.0), (std::vector<double>{1.0}));
  try {
    rr_from_peaks({{5}}, 250.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kTooFewPeaks);
  }
}

TEST(RrFromPeaks, ScaleCoherence) {
  const PeakList p{{3, 180, 420, 650, 901}};
  PeakList scaled;
  for (auto i : p.indices) scaled.indices.push_back(i * 4);
  const auto a = rr_from_peaks(p, 250.0);
  const auto b = rr_from_peaks(scaled, 1000.0);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_DOUBLE_EQ(a[i], b[i]);
}

TEST(ClassifyRr, Examples) {
  const auto normal = classify_rr(std::vector<double>{0.8, 0.8, 0.8, 0.8});
  EXPECT_EQ(normal.classification, RrClass::kNormal);
  EXPECT_EQ(normal.rr_diffs.size(), 3u);
  EXPECT_DOUBLE_EQ(normal.cov, 0.0);

  const auto afib = classify_rr(std::vector<double>{0.7, 0.72, 0.69, 1.05});
  EXPECT_EQ(afib.classification, RrClass::kAfib);
  EXPECT_NEAR(afib.max_rr - afib.min_rr, 0.36, 1e-12);

  try {
    classify_rr(std::vector<double>{0.8, 0.8, 0.8});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kTooFewPeaks);
  }
}

TEST(ClassifyRr, IndeterminateBetweenThresholds) {
  // Tachycardic but regular: out of the normal range, no irregularity.
  EXPECT_EQ(classify_rr(std::vector<double>{0.5, 0.5, 0.5, 0.5, 0.5}).classification, RrClass::kIndeterminate);
}

TEST(ClassifyRr, StatisticsAgainstDirectFormulas) {
  const std::vector<double> rr{0.8, 0.9, 0.7, 0.85, 0.75};
  const auto v = classify_rr(rr);
  EXPECT_DOUBLE_EQ(v.min_rr, 0.7);
  EXPECT_DOUBLE_EQ(v.max_rr, 0.9);
  EXPECT_NEAR(v.mean_rr, 0.8, 1e-15);
  const double sd = std::sqrt((0.0 + 0.01 + 0.01 + 0.0025 + 0.0025) / 5.0);
  EXPECT_NEAR(v.cov, sd / 0.8, 1e-12);
  const double rmssd = std::sqrt((0.01 + 0.04 + 0.0225 + 0.01) / 4.0);
  EXPECT_NEAR(v.rmssd, rmssd, 1e-12);
  ASSERT_EQ(v.rr_diffs.size(), 4u);
  EXPECT_NEAR(v.rr_diffs[1], -0.2, 1e-12);
}

TEST(ClassifyRr, PermutationInvariant) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    auto rr = t::uniform_rr(12, 0.55, 0.95, trial);
    const auto a = classify_rr(rr);
    std::shuffle(rr.begin(), rr.end(), rng);
    const auto b = classify_rr(rr);
    EXPECT_EQ(a.classification, b.classification);
    EXPECT_DOUBLE_EQ(a.min_rr, b.min_rr);
    EXPECT_DOUBLE_EQ(a.max_rr, b.max_rr);
    EXPECT_NEAR(a.cov, b.cov, 1e-12);
  }
}

TEST(ClassifyRr, MonteCarloRegularAndIrregular) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    EXPECT_EQ(classify_rr(t::regular_rr(20, 0.8, 0.01, seed)).classification, RrClass::kNormal) << seed;
    EXPECT_EQ(classify_rr(t::uniform_rr(20, 0.4, 1.2, seed)).classification, RrClass::kAfib) << seed;
  }
}

TEST(ClassifyRr, RangeOnlyRuleIgnoresCov) {
  // Spread 0.15 s passes the range rule but CoV ~0.097 exceeds the 0.08 NORMAL bound.
  const std::vector<double> rr{0.7, 0.85, 0.7, 0.85, 0.7, 0.85};
  EXPECT_EQ(classify_rr(rr, {}, RrRule::kRangeOnly).classification, RrClass::kNormal);
  EXPECT_NE(classify_rr(rr, {}, RrRule::kDefault).classification, RrClass::kNormal);
}

TEST(Pipeline, ConstantRateTrainsAreNormal) {
  for (int bpm = 55; bpm <= 95; bpm += 5) {
    t::SynthParams p;
    p.seconds = 30;
    p.mean_rr = 60.0 / bpm;
    p.jitter = 0.0;
    p.seed = static_cast<std::uint64_t>(bpm);
    const auto e = t::synth_ecg(p);
    const auto v = classify_rr(rr_from_peaks(detect_r_peaks(e.mv, p.hz), p.hz));
    EXPECT_EQ(v.classification, RrClass::kNormal) << bpm << " bpm";
  }
}

TEST(Pipeline, SyntheticAfibIsAfib) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    t::SynthParams p;
    p.seconds = 30;
    p.afib = true;
    p.seed = seed;
    const auto e = t::synth_ecg(p);
    EXPECT_EQ(classify_rr(rr_from_peaks(detect_r_peaks(e.mv, p.hz), p.hz)).classification, RrClass::kAfib);
  }
}
