#pragma once

#include <cstddef>
#include <span>
#include <string>

namespace afibkit::eval {

struct Metrics {
  std::size_t tp = 0, tn = 0, fp = 0, fn = 0;
  double accuracy = 0.0;
  double sensitivity = 0.0;  // recall
  double specificity = 0.0;
  double precision = 0.0;
  double f1 = 0.0;  // 0 when there are no true positives

  std::size_t total() const noexcept { return tp + tn + fp + fn; }
  friend bool operator==(const Metrics&, const Metrics&) = default;
};

// Throws LengthMismatch, EmptyInput, or InvalidConfig for values outside {0, 1}.
Metrics confusion(std::span<const int> labels, std::span<const int> predictions);

// Fractions from counts; a ratio with a zero denominator is 0.
Metrics from_counts(std::size_t tp, std::size_t tn, std::size_t fp, std::size_t fn);

std::string to_json(const Metrics& m, int indent = 2);
Metrics metrics_from_json(const std::string& text);

struct Comparison {
  Metrics cnn1d;
  Metrics cnn2d;
  bool cnn1d_at_least_cnn2d = false;  // accuracy(1D) >= accuracy(2D)
  std::string json;
  std::string table;
};

Comparison compare_report(const Metrics& m1d, const Metrics& m2d);

}  // namespace afibkit::eval
