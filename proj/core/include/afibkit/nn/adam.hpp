#pragma once

#include <cstdint>
#include <vector>

#include "afibkit/nn/layers.hpp"

namespace afibkit::nn {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

class Adam {
 public:
  explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

  // One bias-corrected update of every parameter from its accumulated grad.
  // The parameter list must keep the same shapes between calls.
  void step(const std::vector<Param*>& params);

  const AdamConfig& config() const noexcept { return cfg_; }
  std::uint64_t step_count() const noexcept { return t_; }
  const std::vector<Tensor>& first_moment() const noexcept { return m_; }
  const std::vector<Tensor>& second_moment() const noexcept { return v_; }

 private:
  AdamConfig cfg_;
  std::uint64_t t_ = 0;
  std::vector<Tensor> m_, v_;
};

}  // namespace afibkit::nn
