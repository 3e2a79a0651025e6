#pragma once

// Watch-grade dataset preparation: single-lead selection, downsampling, noise
// injection, labeled windowing, class balancing and the train/test split.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "afibkit/wfdb.hpp"

namespace afibkit::prep {

struct SegmentSource {
  std::string record_name;
  std::size_t start_sample = 0;  // in the record's native sample clock

  friend bool operator==(const SegmentSource&, const SegmentSource&) = default;
};

struct Segment {
  std::vector<double> samples;  // z-scored mV
  int label = 0;                // 1 = AFIB
  SegmentSource source;
  double effective_hz = 0.0;
};

struct PrepConfig {
  double window_seconds = 10.0;
  double label_threshold = 0.5;
  int downsample_factor = 2;
  std::optional<double> noise_snr_db = 10.0;
  double wander_amplitude = 0.1;  // fraction of signal RMS
  std::uint64_t seed = 42;
  int channel = 0;

  // Throws InvalidConfig when an invariant is violated.
  void validate() const;
};

inline constexpr std::size_t kDownsampleTaps = 31;
inline constexpr double kWanderHz = 0.3;

std::vector<double> select_channel(const wfdb::Record& record, std::size_t index);

// 31-tap windowed-sinc low-pass at 0.45 x the new Nyquist, then keep every
// `factor`-th sample. Output length is ceil(len / factor).
struct Downsampled {
  std::vector<double> signal;
  double sampling_hz = 0.0;
};
Downsampled downsample(std::span<const double> signal, int factor, double sampling_hz);

// Low-pass taps used by downsample(); unity DC gain.
std::vector<double> decimation_filter(int factor);

std::vector<double> add_noise(std::span<const double> signal, std::optional<double> snr_db,
                              double wander_amplitude, std::uint64_t seed, double sampling_hz);

// Maps native-clock rhythm intervals onto a signal decimated by `factor`.
std::vector<wfdb::RhythmInterval> decimate_intervals(const std::vector<wfdb::RhythmInterval>& intervals,
                                                     int factor);

std::size_t window_length(const PrepConfig& cfg, double effective_hz);

// `source_scale` converts a sample index of `signal` back to the native clock.
std::vector<Segment> segment_record(std::span<const double> signal,
                                    const std::vector<wfdb::RhythmInterval>& intervals,
                                    const PrepConfig& cfg, double effective_hz,
                                    const std::string& record_name = {},
                                    std::size_t source_scale = 1);

struct Split {
  std::vector<Segment> train;
  std::vector<Segment> test;
  std::optional<std::string> warning;
};
Split split_dataset(std::vector<Segment> segments, double train_fraction, std::uint64_t seed);

// Undersamples the majority class to the minority count (optionally capped
// per class). Kept segments retain their input order.
std::vector<Segment> balance_classes(std::vector<Segment> segments, std::uint64_t seed,
                                     std::optional<std::size_t> per_class_limit = std::nullopt);

// Full single-record pipeline: channel -> downsample -> noise -> windows.
std::vector<Segment> segments_from_record(const wfdb::Record& record,
                                          const std::vector<wfdb::RhythmInterval>& intervals,
                                          const PrepConfig& cfg);

// Stable per-stream seed derived from a base seed and a label.
std::uint64_t derive_seed(std::uint64_t base, std::string_view label);

}  // namespace afibkit::prep
