#include "afibkit/nn/loss.hpp"

#include <algorithm>
#include <cmath>

#include "afibkit/error.hpp"

namespace afibkit::nn {
namespace {

void require_match(const Tensor& a, const Tensor& b, const char* who) {
  if (a.shape() != b.shape()) {
    throw Error(ErrorCode::kShapeMismatch,
                std::string(who) + ": " + shape_string(a.shape()) + " vs " + shape_string(b.shape()));
  }
  if (a.empty()) throw Error(ErrorCode::kShapeMismatch, std::string(who) + ": empty batch");
}

}  // namespace

double sigmoid(double z) noexcept {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

LossResult sigmoid_bce(const Tensor& logits, const Tensor& targets) {
  require_match(logits, targets, "sigmoid_bce");
  const double n = static_cast<double>(logits.size());
  LossResult r{0.0, Tensor(logits.shape())};
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const double z = logits[i];
    const double y = targets[i];
    r.loss += std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)));
    r.grad[i] = (sigmoid(z) - y) / n;
  }
  r.loss /= n;
  return r;
}

LossResult squared_error(const Tensor& prediction, const Tensor& target) {
  require_match(prediction, target, "squared_error");
  LossResult r{0.0, Tensor(prediction.shape())};
  for (std::size_t i = 0; i < prediction.size(); ++i) {
    const double d = prediction[i] - target[i];
    r.loss += d * d;
    r.grad[i] = 2.0 * d;
  }
  return r;
}

}  // namespace afibkit::nn
