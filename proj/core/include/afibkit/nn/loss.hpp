#pragma once

#include "afibkit/nn/tensor.hpp"

namespace afibkit::nn {

struct LossResult {
  double loss = 0.0;
  Tensor grad;  // dLoss/d(input), same shape as the input
};

// Mean binary cross-entropy of sigmoid(logits) against 0/1 targets, in the
// overflow-free form max(z, 0) - z*y + log1p(exp(-|z|)).
LossResult sigmoid_bce(const Tensor& logits, const Tensor& targets);

// Sum of squared differences.
LossResult squared_error(const Tensor& prediction, const Tensor& target);

double sigmoid(double z) noexcept;

}  // namespace afibkit::nn
