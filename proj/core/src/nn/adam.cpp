#include "afibkit/nn/adam.hpp"

#include <cmath>

#include "afibkit/error.hpp"

namespace afibkit::nn {

void Adam::step(const std::vector<Param*>& params) {
  if (m_.empty() && t_ == 0) {
    for (const Param* p : params) {
      m_.emplace_back(p->value.shape());
      v_.emplace_back(p->value.shape());
    }
  }
  if (params.size() != m_.size()) {
    throw Error(ErrorCode::kShapeMismatch, "adam tracks " + std::to_string(m_.size()) + " tensors, got " +
                                               std::to_string(params.size()));
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (params[k]->value.shape() != m_[k].shape() || params[k]->grad.shape() != m_[k].shape()) {
      throw Error(ErrorCode::kShapeMismatch, "adam state for " + params[k]->name + " is " +
                                                 shape_string(m_[k].shape()));
    }
  }

  ++t_;
  const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor& theta = params[k]->value;
    const Tensor& g = params[k]->grad;
    Tensor& m = m_[k];
    Tensor& v = v_[k];
    for (std::size_t i = 0; i < theta.size(); ++i) {
      m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g[i];
      v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g[i] * g[i];
      const double mhat = m[i] / c1;
      const double vhat = v[i] / c2;
      theta[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.epsilon);
    }
  }
}

}  // namespace afibkit::nn
