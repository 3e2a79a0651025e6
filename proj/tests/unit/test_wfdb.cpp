#include <gtest/gtest.h>

#include <map>
#include <random>

#include "afibkit/error.hpp"
#include "afibkit/wfdb.hpp"
#include "support/synth.hpp"

using namespace afibkit;
using namespace afibkit::wfdb;
using afibkit::testing::mitdb_dir;

namespace {

std::vector<std::uint8_t> bytes(std::initializer_list<int> v) {
  std::vector<std::uint8_t> out;
  for (int b : v) out.push_back(static_cast<std::uint8_t>(b));
  return out;
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no afibkit::Error thrown";
  return ErrorCode::kIoError;
}

}  // namespace

TEST(ParseHeader, RecordLineAndSignals) {
  const auto h = parse_header(
      "04015 2 250 9205760\n"
      "04015.dat 212 200 12 0 -17 26750 0 ECG1\n"
      "04015.dat 212 200 12 0 -10 -5009 0 ECG2\n");
  EXPECT_EQ(h.record_name, "04015");
  EXPECT_EQ(h.num_signals, 2u);
  EXPECT_DOUBLE_EQ(h.sampling_hz, 250.0);
  EXPECT_EQ(h.num_samples, 9205760u);
  ASSERT_EQ(h.signals.size(), 2u);
  EXPECT_EQ(h.signals[0].format_code, 212);
  EXPECT_DOUBLE_EQ(h.signals[0].gain, 200.0);
  EXPECT_EQ(h.signals[0].initial_value, -17);
  EXPECT_EQ(h.signals[1].checksum, std::optional<std::int16_t>(-5009));
  EXPECT_EQ(h.signals[1].description, "ECG2");
}

TEST(ParseHeader, ZeroOrMissingFrequencyDefaultsTo250) {
  EXPECT_DOUBLE_EQ(parse_header("x 1 0\nx.dat 16\n").sampling_hz, 250.0);
  EXPECT_DOUBLE_EQ(parse_header("x 1\nx.dat 16\n").sampling_hz, 250.0);
}

TEST(ParseHeader, GainBaselineAndUnits) {
  const auto h = parse_header("r 1 360 10\nr.dat 212 100(-5)/uV 11 1024 3 7 0 lead\n");
  EXPECT_DOUBLE_EQ(h.signals[0].gain, 100.0);
  EXPECT_EQ(h.signals[0].baseline, -5);
  EXPECT_EQ(h.signals[0].units, "uV");
  EXPECT_EQ(h.signals[0].adc_zero, 1024);
}

TEST(ParseHeader, ZeroGainBecomesDefault) {
  EXPECT_DOUBLE_EQ(parse_header("r 1 360 10\nr.dat 212 0 12 0 0 0\n").signals[0].gain, 200.0);
}

TEST(ParseHeader, BaselineDefaultsToAdcZero) {
  EXPECT_EQ(parse_header("r 1 360 10\nr.dat 212 200 11 1024 0 0\n").signals[0].baseline, 1024);
}

TEST(ParseHeader, CommentsAreSkipped) {
  const auto h = parse_header("# leading comment\nr 1 360 4\n# mid\nr.dat 16 200 16 0 0 0\n");
  EXPECT_EQ(h.num_samples, 4u);
  EXPECT_EQ(h.signals[0].format_code, 16);
}

TEST(ParseHeader, Errors) {
  EXPECT_EQ(code_of([] { parse_header(""); }), ErrorCode::kMalformedHeader);
  EXPECT_EQ(code_of([] { parse_header("r two 250\n"); }), ErrorCode::kMalformedHeader);
  EXPECT_EQ(code_of([] { parse_header("r 2 250 10\nr.dat 212\n"); }), ErrorCode::kMalformedHeader);
  EXPECT_EQ(code_of([] { parse_header("r 1 abc 10\nr.dat 212\n"); }), ErrorCode::kMalformedHeader);
  EXPECT_EQ(code_of([] { parse_header("r 1 250 10\nr.dat 80\n"); }), ErrorCode::kUnsupportedFormat);
  EXPECT_EQ(code_of([] { parse_header("r/2 1 250 10\nr.dat 212\n"); }), ErrorCode::kUnsupportedFormat);
}

TEST(Format212, BitLevelExamples) {
  auto s = decode_format212(bytes({0x00, 0x00, 0x00}), 1);
  EXPECT_EQ(s[0][0], 0);
  EXPECT_EQ(s[1][0], 0);
  s = decode_format212(bytes({0xFF, 0x0F, 0x00}), 1);
  EXPECT_EQ(s[0][0], -1);
  EXPECT_EQ(s[1][0], 0);
  s = decode_format212(bytes({0x01, 0x20, 0x02}), 1);
  EXPECT_EQ(s[0][0], 1);
  EXPECT_EQ(s[1][0], 514);
}

TEST(Format212, ExtremesAndTruncation) {
  const auto s = decode_format212(bytes({0x00, 0x88, 0xFF}), 1);
  EXPECT_EQ(s[0][0], -2048);
  EXPECT_EQ(s[1][0], -1793);
  EXPECT_EQ(code_of([] { decode_format212(bytes({0x00, 0x00}), 1); }), ErrorCode::kTruncatedSignal);
}

TEST(Format212, SingleChannelOddCount) {
  // Three samples of one channel occupy 4.5 -> 5 bytes.
  const auto enc = encode_format212({{5, -6, 7}});
  EXPECT_EQ(enc.size(), 5u);
  const auto s = decode_format212(enc, 3, 1);
  EXPECT_EQ(s[0], (std::vector<int>{5, -6, 7}));
}

TEST(Format212, RoundTripRandom) {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> d(-2048, 2047);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 2 * (1 + rng() % 200);
    std::vector<std::vector<int>> ch(2, std::vector<int>(n));
    for (auto& c : ch)
      for (auto& v : c) v = d(rng);
    const auto enc = encode_format212(ch);
    EXPECT_EQ(decode_format212(enc, n), ch);
    EXPECT_EQ(encode_format212(decode_format212(enc, n)), enc);
  }
}

TEST(Format212, RandomBytesStayInRange) {
  std::mt19937_64 rng(11);
  std::vector<std::uint8_t> raw(3000);
  for (auto& b : raw) b = static_cast<std::uint8_t>(rng());
  for (const auto& c : decode_format212(raw, 1000)) {
    for (int v : c) {
      EXPECT_GE(v, -2048);
      EXPECT_LE(v, 2047);
    }
  }
}

TEST(Format16, LittleEndianSigned) {
  const auto s = decode_format16(bytes({0x01, 0x00, 0xFF, 0xFF, 0x00, 0x80, 0xFF, 0x7F}), 2, 2);
  EXPECT_EQ(s[0], (std::vector<int>{1, -32768}));
  EXPECT_EQ(s[1], (std::vector<int>{-1, 32767}));
}

TEST(ReadRecord, EmptyRecord) {
  const auto h = parse_header("e 1 250 0\ne.dat 212 200 12 0 0 0\n");
  const auto r = read_record(h, {});
  ASSERT_EQ(r.channels.size(), 1u);
  EXPECT_TRUE(r.channels[0].empty());
}

TEST(ReadRecord, ChecksumAndTruncation) {
  const std::vector<std::vector<int>> ch{{1, 2, 3, 4}, {10, -20, 30, -40}};
  const auto dat = encode_format212(ch);
  auto h = parse_header("t 2 250 4\nt.dat 212 200 12 0 1 10 0\nt.dat 212 200 12 0 10 -20 0\n");
  const auto r = read_record(h, dat);
  EXPECT_EQ(r.channels, ch);
  EXPECT_TRUE(r.warnings.empty());

  h.signals[1].checksum = -19;
  try {
    read_record(h, dat);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kChecksumMismatch);
    EXPECT_NE(e.detail().find("-19"), std::string::npos);
  }
  EXPECT_EQ(read_record(h, dat, ChecksumPolicy::kWarn).warnings.size(), 1u);

  auto short_dat = dat;
  short_dat.pop_back();
  h.signals[1].checksum = -20;
  EXPECT_EQ(code_of([&] { read_record(h, short_dat); }), ErrorCode::kTruncatedSignal);
}

TEST(ReadRecord, MillivoltView) {
  const auto h = parse_header("m 1 250 2\nm.dat 16 200(0) 16 0 0 0\n");
  const auto r = read_record(h, bytes({200, 0, 0x38, 0xFF}));
  const auto mv = r.millivolts(0);
  EXPECT_DOUBLE_EQ(mv[0], 1.0);
  EXPECT_DOUBLE_EQ(mv[1], -1.0);
}

TEST(Annotations, BitLevelExamples) {
  auto a = parse_annotations(bytes({0x0A, 0x04, 0x00, 0x00}));
  ASSERT_EQ(a.annotations.size(), 1u);
  EXPECT_EQ(a.annotations[0].code, 1);
  EXPECT_EQ(a.annotations[0].sample_index, 10u);
  EXPECT_TRUE(parse_annotations(bytes({0x00, 0x00})).annotations.empty());
}

TEST(Annotations, SkipAuxAndIgnoredCodes) {
  std::vector<Annotation> in{{5, 1, std::nullopt},
                             {100000, kCodeRhythm, std::string("(AFIB")},
                             {100300, 5, std::nullopt},
                             {2000000, kCodeRhythm, std::string("(N")}};
  auto enc = afibkit::testing::encode_annotations(in);
  // Splice a NUM word (code 60) before the terminator; it must be ignored.
  enc.insert(enc.end() - 2, {0x03, static_cast<std::uint8_t>(60 << 2)});
  const auto out = parse_annotations(enc, 250.0);
  ASSERT_EQ(out.annotations.size(), 4u);
  for (std::size_t i = 0; i < in.size(); ++i) {
    EXPECT_EQ(out.annotations[i].sample_index, in[i].sample_index);
    EXPECT_EQ(out.annotations[i].code, in[i].code);
    EXPECT_EQ(out.annotations[i].aux, in[i].aux);
  }
  EXPECT_DOUBLE_EQ(out.sampling_hz, 250.0);
}

TEST(Annotations, Malformed) {
  EXPECT_EQ(code_of([] { parse_annotations(bytes({0x0A, 0x04})); }), ErrorCode::kMalformedAnnotation);
  // AUX of 6 bytes with only 2 present.
  EXPECT_EQ(code_of([] { parse_annotations(bytes({0x0A, 0x04, 0x06, 0xFC, 'a', 'b'})); }),
            ErrorCode::kMalformedAnnotation);
}

TEST(RhythmIntervals, Examples) {
  AnnotationSet a;
  a.annotations = {{100, kCodeRhythm, std::string("(AFIB")}, {500, kCodeRhythm, std::string("(N")}};
  const std::vector<RhythmInterval> want{{0, 100, Rhythm::kOther}, {100, 500, Rhythm::kAfib},
                                         {500, 800, Rhythm::kOther}};
  EXPECT_EQ(rhythm_intervals(a, 800), want);
  EXPECT_EQ(afib_sample_count(want), 400u);

  EXPECT_EQ(rhythm_intervals(AnnotationSet{}, 10), (std::vector<RhythmInterval>{{0, 10, Rhythm::kOther}}));
}

TEST(RhythmIntervals, PartitionProperty) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    AnnotationSet a;
    std::size_t t = 0;
    const std::size_t n = 10000;
    for (int k = 0; k < 8; ++k) {
      t += rng() % 1500;
      if (t >= n) break;
      const char* aux = (rng() % 3 == 0) ? "(AFL" : (rng() % 2 ? "(AFIB" : "(N");
      a.annotations.push_back({t, kCodeRhythm, std::string(aux)});
      a.annotations.push_back({t, 1, std::nullopt});
    }
    const auto iv = rhythm_intervals(a, n);
    ASSERT_FALSE(iv.empty());
    EXPECT_EQ(iv.front().start_sample, 0u);
    EXPECT_EQ(iv.back().end_sample, n);
    for (std::size_t i = 0; i < iv.size(); ++i) {
      EXPECT_LT(iv[i].start_sample, iv[i].end_sample);
      if (i > 0) {
        EXPECT_EQ(iv[i].start_sample, iv[i - 1].end_sample);
      }
    }
  }
}

// Frozen values cross-checked against the reference Python WFDB reader.
TEST(Mitdb, Record100) {
  const auto rec = load_record(mitdb_dir() / "100");
  EXPECT_EQ(rec.header.num_signals, 2u);
  EXPECT_DOUBLE_EQ(rec.header.sampling_hz, 360.0);
  EXPECT_EQ(rec.header.num_samples, 650000u);
  EXPECT_EQ(rec.header.signals[0].initial_value, 995);
  EXPECT_EQ(rec.header.signals[1].initial_value, 1011);
  EXPECT_EQ(rec.header.signals[0].baseline, 1024);
  EXPECT_EQ(rec.header.signals[0].description, "MLII");
  ASSERT_EQ(rec.channels[0].size(), 650000u);
  EXPECT_EQ(rec.channels[0][0], 995);
  EXPECT_EQ(rec.channels[1][0], 1011);
  EXPECT_EQ(rec.channels[0][649998], 871);
  EXPECT_EQ(rec.channels[1][649998], 957);
  EXPECT_EQ(rec.channels[0][649999], 768);
  EXPECT_EQ(rec.channels[1][649999], 1024);

  const auto ann = load_annotations(mitdb_dir() / "100", rec.header.sampling_hz);
  ASSERT_EQ(ann.annotations.size(), 2274u);
  EXPECT_EQ(ann.annotations[0].sample_index, 18u);
  EXPECT_EQ(ann.annotations[0].code, kCodeRhythm);
  EXPECT_EQ(ann.annotations[0].aux, std::optional<std::string>("(N"));
  EXPECT_EQ(ann.annotations[1].sample_index, 77u);
  EXPECT_EQ(ann.annotations[2].sample_index, 370u);
  EXPECT_EQ(ann.annotations.back().sample_index, 649991u);

  std::map<int, int> counts;
  for (const auto& a : ann.annotations) counts[a.code]++;
  EXPECT_EQ(counts[1], 2239);  // N
  EXPECT_EQ(counts[8], 33);    // A
  EXPECT_EQ(counts[5], 1);     // V
  EXPECT_EQ(counts[28], 1);    // rhythm

  EXPECT_EQ(afib_sample_count(rhythm_intervals(ann, rec.header.num_samples)), 0u);
}

TEST(Mitdb, Record101) {
  const auto rec = load_record(mitdb_dir() / "101");
  EXPECT_EQ(rec.header.signals[0].initial_value, 955);
  EXPECT_EQ(rec.header.signals[1].initial_value, 992);
  EXPECT_EQ(rec.header.signals[1].description, "V1");
  const auto ann = load_annotations(mitdb_dir() / "101", rec.header.sampling_hz);
  ASSERT_EQ(ann.annotations.size(), 1874u);
  EXPECT_EQ(ann.annotations[0].sample_index, 7u);
  EXPECT_EQ(ann.annotations[1].sample_index, 83u);
  EXPECT_EQ(ann.annotations[2].sample_index, 396u);
  EXPECT_EQ(ann.annotations.back().sample_index, 649751u);
  std::map<int, int> counts;
  for (const auto& a : ann.annotations) counts[a.code]++;
  EXPECT_EQ(counts[1], 1860);
  EXPECT_EQ(counts[8], 3);
}

TEST(Mitdb, MissingFileIsIoError) {
  EXPECT_EQ(code_of([] { load_record(mitdb_dir() / "does_not_exist"); }), ErrorCode::kIoError);
}

TEST(SyntheticRecord, RoundTripsThroughTheReader) {
  afibkit::testing::TempDir tmp("wfdb");
  const auto path = afibkit::testing::write_synthetic_record(tmp.path(), "syn", {{false, 20}, {true, 30}, {false, 10}},
                                                             250.0, 5);
  const auto rec = load_record(path);
  EXPECT_EQ(rec.header.num_samples, 15000u);
  const auto ann = load_annotations(path, 250.0);
  const auto iv = rhythm_intervals(ann, rec.header.num_samples);
  EXPECT_EQ(afib_sample_count(iv), 7500u);
}
