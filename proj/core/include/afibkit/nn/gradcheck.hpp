#pragma once

#include <string>

#include "afibkit/nn/network.hpp"

namespace afibkit::nn {

enum class GradcheckLoss {
  kSigmoidBce,    // forward_logits + sigmoid_bce; targets hold 0/1 labels
  kSquaredError,  // full forward + squared_error against targets
};

struct GradcheckResult {
  double max_error = 0.0;  // max |a - n| / max(|a|, |n|, 1e-8)
  std::string worst;       // "<param>[i]" or "input[i]"
  std::size_t checked = 0;
};

// Compares backward() against central differences for every parameter and
// every input element. Runs in training mode with dropout masks frozen;
// batchnorm running statistics are restored after each probe.
GradcheckResult gradcheck(Network& net, const Tensor& x, const Tensor& targets,
                          GradcheckLoss loss = GradcheckLoss::kSigmoidBce, double eps = 1e-5);

}  // namespace afibkit::nn
