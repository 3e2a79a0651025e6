#include "afibkit/signal_prep.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include "afibkit/error.hpp"

namespace afibkit::prep {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

double mean_square(std::span<const double> x) {
  double acc = 0.0;
  for (double v : x) acc += v * v;
  return x.empty() ? 0.0 : acc / static_cast<double>(x.size());
}

}  // namespace

void PrepConfig::validate() const {
  if (!(window_seconds > 0.0)) throw Error(ErrorCode::kInvalidConfig, "window_seconds must be > 0");
  if (!(label_threshold > 0.0 && label_threshold <= 1.0)) {
    throw Error(ErrorCode::kInvalidConfig, "label_threshold must lie in (0, 1]");
  }
  if (downsample_factor < 1) throw Error(ErrorCode::kInvalidConfig, "downsample_factor must be >= 1");
  if (wander_amplitude < 0.0) throw Error(ErrorCode::kInvalidConfig, "wander_amplitude must be >= 0");
  if (noise_snr_db && !std::isfinite(*noise_snr_db)) {
    throw Error(ErrorCode::kInvalidConfig, "noise_snr_db must be finite");
  }
  if (channel < 0) throw Error(ErrorCode::kInvalidConfig, "channel must be >= 0");
}

std::uint64_t derive_seed(std::uint64_t base, std::string_view label) {
  std::uint64_t h = 0xCBF29CE484222325ull;  // FNV-1a
  for (unsigned char c : label) {
    h ^= c;
    h *= 0x100000001B3ull;
  }
  return splitmix64(base ^ splitmix64(h));
}

std::vector<double> select_channel(const wfdb::Record& record, std::size_t index) {
  if (index >= record.channels.size()) {
    throw Error(ErrorCode::kChannelOutOfRange, "channel " + std::to_string(index) + " of " +
                                                   std::to_string(record.channels.size()));
  }
  return record.millivolts(index);
}

std::vector<double> decimation_filter(int factor) {
  const double cutoff = 0.45 / (2.0 * factor);  // cycles per input sample
  constexpr std::size_t n = kDownsampleTaps;
  constexpr double mid = (n - 1) / 2.0;
  std::vector<double> h(n);
  // Fill the first half and mirror so the taps are exactly symmetric.
  for (std::size_t i = 0; i <= n / 2; ++i) {
    const double t = static_cast<double>(i) - mid;
    const double sinc = t == 0.0 ? 2.0 * cutoff
                                 : std::sin(2.0 * std::numbers::pi * cutoff * t) / (std::numbers::pi * t);
    const double hamming = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * i / (n - 1));
    h[i] = sinc * hamming;
    h[n - 1 - i] = h[i];
  }
  const double sum = std::accumulate(h.begin(), h.end(), 0.0);
  for (double& v : h) v /= sum;
  return h;
}

Downsampled downsample(std::span<const double> signal, int factor, double sampling_hz) {
  if (factor < 1) throw Error(ErrorCode::kInvalidConfig, "downsample factor must be >= 1");
  if (factor == 1) return {std::vector<double>(signal.begin(), signal.end()), sampling_hz};

  const auto h = decimation_filter(factor);
  const auto half = static_cast<std::ptrdiff_t>(h.size() / 2);
  const auto len = static_cast<std::ptrdiff_t>(signal.size());
  const std::size_t out_len = (signal.size() + factor - 1) / factor;
  std::vector<double> out(out_len);
  for (std::size_t j = 0; j < out_len; ++j) {
    const auto centre = static_cast<std::ptrdiff_t>(j) * factor;
    double acc = 0.0;
    for (std::ptrdiff_t k = 0; k < static_cast<std::ptrdiff_t>(h.size()); ++k) {
      // Edge samples are replicated past both ends.
      const auto idx = std::clamp<std::ptrdiff_t>(centre + k - half, 0, len - 1);
      acc += h[static_cast<std::size_t>(k)] * signal[static_cast<std::size_t>(idx)];
    }
    out[j] = acc;
  }
  return {std::move(out), sampling_hz / factor};
}

std::vector<double> add_noise(std::span<const double> signal, std::optional<double> snr_db,
                              double wander_amplitude, std::uint64_t seed, double sampling_hz) {
  std::vector<double> out(signal.begin(), signal.end());
  if (!snr_db && wander_amplitude == 0.0) return out;

  const double power = mean_square(signal);
  if (snr_db && power == 0.0) {
    throw Error(ErrorCode::kDegenerateSignal, "cannot set an SNR on a zero-RMS signal");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> phase_dist(0.0, 2.0 * std::numbers::pi);
  const double phase = phase_dist(rng);

  if (wander_amplitude != 0.0) {
    const double amp = wander_amplitude * std::sqrt(power);
    const double w = 2.0 * std::numbers::pi * kWanderHz / sampling_hz;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += amp * std::sin(w * static_cast<double>(i) + phase);
  }
  if (snr_db) {
    const double noise_power = power / std::pow(10.0, *snr_db / 10.0);
    std::normal_distribution<double> gauss(0.0, std::sqrt(noise_power));
    for (double& v : out) v += gauss(rng);
  }
  return out;
}

std::vector<wfdb::RhythmInterval> decimate_intervals(const std::vector<wfdb::RhythmInterval>& intervals,
                                                     int factor) {
  const auto f = static_cast<std::size_t>(factor);
  std::vector<wfdb::RhythmInterval> out;
  for (const auto& iv : intervals) {
    const std::size_t s = (iv.start_sample + f - 1) / f;
    const std::size_t e = (iv.end_sample + f - 1) / f;
    if (s < e) out.push_back({s, e, iv.rhythm});
  }
  return out;
}

std::size_t window_length(const PrepConfig& cfg, double effective_hz) {
  return static_cast<std::size_t>(std::llround(cfg.window_seconds * effective_hz));
}

std::vector<Segment> segment_record(std::span<const double> signal,
                                    const std::vector<wfdb::RhythmInterval>& intervals,
                                    const PrepConfig& cfg, double effective_hz,
                                    const std::string& record_name, std::size_t source_scale) {
  cfg.validate();
  const std::size_t L = window_length(cfg, effective_hz);
  if (L == 0) throw Error(ErrorCode::kInvalidConfig, "window shorter than one sample");

  std::vector<Segment> out;
  std::size_t iv = 0;
  for (std::size_t start = 0; start + L <= signal.size(); start += L) {
    const std::size_t end = start + L;
    while (iv < intervals.size() && intervals[iv].end_sample <= start) ++iv;
    std::size_t afib = 0;
    for (std::size_t k = iv; k < intervals.size() && intervals[k].start_sample < end; ++k) {
      if (intervals[k].rhythm != wfdb::Rhythm::kAfib) continue;
      afib += std::min(end, intervals[k].end_sample) - std::max(start, intervals[k].start_sample);
    }
    const double fraction = static_cast<double>(afib) / static_cast<double>(L);

    auto window = signal.subspan(start, L);
    const double mean = std::accumulate(window.begin(), window.end(), 0.0) / static_cast<double>(L);
    double var = 0.0;
    for (double v : window) var += (v - mean) * (v - mean);
    var /= static_cast<double>(L);
    if (!(var > 1e-20)) continue;

    Segment seg;
    const double inv_sd = 1.0 / std::sqrt(var);
    seg.samples.resize(L);
    for (std::size_t i = 0; i < L; ++i) seg.samples[i] = (window[i] - mean) * inv_sd;
    seg.label = fraction >= cfg.label_threshold ? 1 : 0;
    seg.source = {record_name, start * source_scale};
    seg.effective_hz = effective_hz;
    out.push_back(std::move(seg));
  }
  return out;
}

Split split_dataset(std::vector<Segment> segments, double train_fraction, std::uint64_t seed) {
  if (segments.size() < 2) {
    throw Error(ErrorCode::kEmptyDataset, "need at least 2 segments to split, have " +
                                              std::to_string(segments.size()));
  }
  if (!(train_fraction > 0.0 && train_fraction <= 1.0)) {
    throw Error(ErrorCode::kInvalidConfig, "train_fraction must lie in (0, 1]");
  }
  std::vector<std::size_t> order(segments.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  const auto n_train = static_cast<std::size_t>(
      std::llround(train_fraction * static_cast<double>(segments.size())));
  Split split;
  for (std::size_t i = 0; i < order.size(); ++i) {
    (i < n_train ? split.train : split.test).push_back(std::move(segments[order[i]]));
  }
  if (split.test.empty()) {
    split.warning = "test split is empty (" + std::to_string(order.size()) + " segments)";
  } else if (split.train.empty()) {
    split.warning = "train split is empty";
  }
  return split;
}

std::vector<Segment> balance_classes(std::vector<Segment> segments, std::uint64_t seed,
                                     std::optional<std::size_t> per_class_limit) {
  std::vector<std::size_t> pos;
  std::vector<std::size_t> neg;
  for (std::size_t i = 0; i < segments.size(); ++i) (segments[i].label == 1 ? pos : neg).push_back(i);
  if (pos.empty() || neg.empty()) {
    throw Error(ErrorCode::kSingleClass, std::to_string(pos.size()) + " positive / " +
                                             std::to_string(neg.size()) + " negative segments");
  }
  std::size_t keep = std::min(pos.size(), neg.size());
  if (per_class_limit) keep = std::min(keep, *per_class_limit);

  std::mt19937_64 rng(seed);
  std::vector<bool> kept(segments.size(), false);
  for (auto* group : {&pos, &neg}) {
    if (group->size() > keep) std::shuffle(group->begin(), group->end(), rng);
    for (std::size_t i = 0; i < keep; ++i) kept[(*group)[i]] = true;
  }
  std::vector<Segment> out;
  out.reserve(2 * keep);
  for (std::size_t i = 0; i < segments.size(); ++i) {
    if (kept[i]) out.push_back(std::move(segments[i]));
  }
  return out;
}

std::vector<Segment> segments_from_record(const wfdb::Record& record,
                                          const std::vector<wfdb::RhythmInterval>& intervals,
                                          const PrepConfig& cfg) {
  cfg.validate();
  const auto mv = select_channel(record, static_cast<std::size_t>(cfg.channel));
  auto ds = downsample(mv, cfg.downsample_factor, record.header.sampling_hz);
  const std::string& name = record.header.record_name;
  auto noisy = add_noise(ds.signal, cfg.noise_snr_db, cfg.wander_amplitude, derive_seed(cfg.seed, name),
                         ds.sampling_hz);
  const auto ds_intervals = decimate_intervals(intervals, cfg.downsample_factor);
  return segment_record(noisy, ds_intervals, cfg, ds.sampling_hz, name,
                        static_cast<std::size_t>(cfg.downsample_factor));
}

}  // namespace afibkit::prep
