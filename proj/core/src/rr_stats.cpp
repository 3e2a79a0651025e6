#include "afibkit/rr_stats.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numbers>
#include <numeric>

#include "afibkit/error.hpp"

namespace afibkit::rr {
namespace {

std::size_t odd_taps(double hz, double seconds) {
  auto n = static_cast<std::size_t>(std::lround(hz * seconds));
  return std::max<std::size_t>(n | 1u, 3);
}

// Hamming-windowed sinc low-pass with unity DC gain.
std::vector<double> lowpass_taps(double cutoff_hz, double hz, std::size_t n) {
  const double fc = cutoff_hz / hz;
  const double mid = (static_cast<double>(n) - 1.0) / 2.0;
  std::vector<double> h(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) - mid;
    const double sinc = t == 0.0 ? 2.0 * fc : std::sin(2.0 * std::numbers::pi * fc * t) / (std::numbers::pi * t);
    h[i] = sinc * (0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / (n - 1.0)));
  }
  const double sum = std::accumulate(h.begin(), h.end(), 0.0);
  for (double& v : h) v /= sum;
  return h;
}

// Zero-phase FIR application with edge replication.
std::vector<double> filter_centered(std::span<const double> x, const std::vector<double>& h) {
  const auto half = static_cast<std::ptrdiff_t>(h.size() / 2);
  const auto len = static_cast<std::ptrdiff_t>(x.size());
  std::vector<double> y(x.size());
  for (std::ptrdiff_t i = 0; i < len; ++i) {
    double acc = 0.0;
    for (std::ptrdiff_t k = 0; k < static_cast<std::ptrdiff_t>(h.size()); ++k) {
      const auto idx = std::clamp<std::ptrdiff_t>(i + k - half, 0, len - 1);
      acc += h[static_cast<std::size_t>(k)] * x[static_cast<std::size_t>(idx)];
    }
    y[static_cast<std::size_t>(i)] = acc;
  }
  return y;
}

std::vector<double> bandpass(std::span<const double> x, double hz, const DetectorConfig& cfg) {
  const std::size_t n = odd_taps(hz, 0.5);
  auto low = filter_centered(x, lowpass_taps(std::min(cfg.band_high_hz, 0.45 * hz), hz, n));
  // High-pass by subtracting the 5 Hz low-pass component.
  const auto trend = filter_centered(low, lowpass_taps(cfg.band_low_hz, hz, n));
  for (std::size_t i = 0; i < low.size(); ++i) low[i] -= trend[i];
  return low;
}

}  // namespace

std::string_view to_string(RrClass c) noexcept {
  switch (c) {
    case RrClass::kNormal: return "NORMAL";
    case RrClass::kAfib: return "AFIB";
    case RrClass::kIndeterminate: return "INDETERMINATE";
  }
  return "INDETERMINATE";
}

PeakList detect_r_peaks(std::span<const double> signal, double hz, const DetectorConfig& cfg) {
  if (!(hz > 0.0)) throw Error(ErrorCode::kInvalidConfig, "sampling rate must be positive");
  if (static_cast<double>(signal.size()) < 2.0 * hz) {
    throw Error(ErrorCode::kSignalTooShort, std::to_string(signal.size()) + " samples at " +
                                                std::to_string(hz) + " Hz (need 2 s)");
  }
  const std::size_t len = signal.size();
  const auto filtered = bandpass(signal, hz, cfg);

  // Centered 5-point derivative, then squaring.
  std::vector<double> energy(len, 0.0);
  for (std::size_t i = 2; i + 2 < len; ++i) {
    const double d = (2.0 * filtered[i + 2] + filtered[i + 1] - filtered[i - 1] - 2.0 * filtered[i - 2]) * hz / 8.0;
    energy[i] = d * d;
  }

  // Centered moving-window integration.
  const std::size_t win = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(cfg.integration_s * hz)));
  std::vector<double> prefix(len + 1, 0.0);
  for (std::size_t i = 0; i < len; ++i) prefix[i + 1] = prefix[i] + energy[i];
  std::vector<double> mwi(len);
  for (std::size_t i = 0; i < len; ++i) {
    const std::size_t lo = i >= win / 2 ? i - win / 2 : 0;
    const std::size_t hi = std::min(len, lo + win);
    mwi[i] = (prefix[hi] - prefix[lo]) / static_cast<double>(win);
  }

  const auto refractory = static_cast<std::size_t>(std::lround(cfg.refractory_s * hz));
  const auto learning = std::min(len, static_cast<std::size_t>(std::lround(cfg.learning_s * hz)));
  std::deque<double> heights;
  heights.push_back(*std::max_element(mwi.begin(), mwi.begin() + static_cast<std::ptrdiff_t>(learning)));
  auto threshold = [&] {
    return cfg.threshold_factor * std::accumulate(heights.begin(), heights.end(), 0.0) /
           static_cast<double>(heights.size());
  };

  std::vector<std::size_t> accepted;
  for (std::size_t i = 1; i + 1 < len; ++i) {
    if (!(mwi[i] > mwi[i - 1] && mwi[i] >= mwi[i + 1] && mwi[i] > 0.0)) continue;
    if (mwi[i] < threshold()) continue;
    if (!accepted.empty() && i - accepted.back() < refractory) {
      if (mwi[i] > mwi[accepted.back()]) {
        accepted.back() = i;
        heights.back() = mwi[i];
      }
      continue;
    }
    accepted.push_back(i);
    heights.push_back(mwi[i]);
    while (heights.size() > cfg.peak_memory) heights.pop_front();
  }

  // Move each detection to the local signal maximum.
  const auto reach = static_cast<std::size_t>(std::lround(cfg.refine_s * hz));
  PeakList out;
  for (std::size_t c : accepted) {
    const std::size_t lo = c >= reach ? c - reach : 0;
    const std::size_t hi = std::min(len - 1, c + reach);
    std::size_t best = lo;
    for (std::size_t k = lo; k <= hi; ++k) {
      if (signal[k] > signal[best]) best = k;
    }
    if (!out.indices.empty()) {
      const std::size_t prev = out.indices.back();
      if (best <= prev || best - prev < refractory) {
        // Keep the taller of two conflicting peaks if ordering allows it.
        const std::size_t n = out.indices.size();
        const bool fits = n == 1 || best >= out.indices[n - 2] + refractory;
        if (signal[best] > signal[prev] && fits) out.indices.back() = best;
        continue;
      }
    }
    out.indices.push_back(best);
  }
  return out;
}

std::vector<double> rr_from_peaks(const PeakList& peaks, double hz) {
  if (peaks.indices.size() < 2) {
    throw Error(ErrorCode::kTooFewPeaks, std::to_string(peaks.indices.size()) + " peak(s)");
  }
  std::vector<double> rr(peaks.indices.size() - 1);
  for (std::size_t i = 0; i + 1 < peaks.indices.size(); ++i) {
    rr[i] = static_cast<double>(peaks.indices[i + 1] - peaks.indices[i]) / hz;
  }
  return rr;
}

RrVerdict classify_rr(std::span<const double> rr_intervals, const RrThresholds& t, RrRule rule) {
  if (rr_intervals.size() < kMinRrIntervals) {
    throw Error(ErrorCode::kTooFewPeaks, std::to_string(rr_intervals.size()) + " RR intervals (need " +
                                             std::to_string(kMinRrIntervals) + ")");
  }
  RrVerdict v;
  v.rr_intervals.assign(rr_intervals.begin(), rr_intervals.end());
  for (std::size_t i = 0; i + 1 < rr_intervals.size(); ++i) {
    v.rr_diffs.push_back(rr_intervals[i + 1] - rr_intervals[i]);
  }
  const auto [mn, mx] = std::minmax_element(rr_intervals.begin(), rr_intervals.end());
  v.min_rr = *mn;
  v.max_rr = *mx;
  const double n = static_cast<double>(rr_intervals.size());
  v.mean_rr = std::accumulate(rr_intervals.begin(), rr_intervals.end(), 0.0) / n;
  double var = 0.0;
  for (double x : rr_intervals) var += (x - v.mean_rr) * (x - v.mean_rr);
  v.cov = v.mean_rr > 0.0 ? std::sqrt(var / n) / v.mean_rr : 0.0;
  double sq = 0.0;
  for (double d : v.rr_diffs) sq += d * d;
  v.rmssd = std::sqrt(sq / static_cast<double>(v.rr_diffs.size()));

  const double spread = v.max_rr - v.min_rr;
  const bool in_range = v.min_rr >= t.min_normal_rr && v.max_rr <= t.max_normal_rr;
  if (rule == RrRule::kRangeOnly) {
    if (in_range && spread <= t.max_spread) {
      v.classification = RrClass::kNormal;
    } else if (spread > t.max_spread) {
      v.classification = RrClass::kAfib;
    }
    return v;
  }
  if (in_range && spread <= t.max_spread && v.cov <= t.max_normal_cov) {
    v.classification = RrClass::kNormal;
  } else if (spread > t.max_spread || v.cov > t.afib_cov) {
    v.classification = RrClass::kAfib;
  }
  return v;
}

}  // namespace afibkit::rr
