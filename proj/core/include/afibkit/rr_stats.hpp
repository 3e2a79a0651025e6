#pragma once

// RR-interval atrial fibrillation rule and the R-peak detector feeding it.

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace afibkit::rr {

struct PeakList {
  std::vector<std::size_t> indices;  // strictly increasing
};

struct DetectorConfig {
  double band_low_hz = 5.0;
  double band_high_hz = 15.0;
  double integration_s = 0.150;
  double refractory_s = 0.200;
  double refine_s = 0.050;
  double threshold_factor = 0.5;
  std::size_t peak_memory = 8;
  double learning_s = 2.0;
};

// Pan-Tompkins style: band-pass, derivative, squaring, moving-window
// integration, adaptive threshold, refractory period, peak refinement.
PeakList detect_r_peaks(std::span<const double> signal, double hz, const DetectorConfig& cfg = {});

std::vector<double> rr_from_peaks(const PeakList& peaks, double hz);

enum class RrClass { kNormal, kAfib, kIndeterminate };
std::string_view to_string(RrClass c) noexcept;

// kRangeOnly uses only the min/max range and spread checks; kDefault adds
// the coefficient-of-variation criteria.
enum class RrRule { kDefault, kRangeOnly };

struct RrThresholds {
  double min_normal_rr = 0.6;  // s
  double max_normal_rr = 1.2;  // s
  double max_spread = 0.16;    // s, max_rr - min_rr
  double max_normal_cov = 0.08;
  double afib_cov = 0.15;
};

struct RrVerdict {
  std::vector<double> rr_intervals;
  std::vector<double> rr_diffs;
  double max_rr = 0.0;
  double min_rr = 0.0;
  double mean_rr = 0.0;
  double cov = 0.0;
  double rmssd = 0.0;
  RrClass classification = RrClass::kIndeterminate;
};

inline constexpr std::size_t kMinRrIntervals = 4;

RrVerdict classify_rr(std::span<const double> rr_intervals, const RrThresholds& thresholds = {},
                      RrRule rule = RrRule::kDefault);

}  // namespace afibkit::rr
