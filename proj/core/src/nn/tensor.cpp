#include "afibkit/nn/tensor.hpp"

#include <algorithm>
#include <cmath>

#include "afibkit/error.hpp"

namespace afibkit::nn {

std::size_t shape_size(const Shape& shape) noexcept {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::string shape_string(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)), data_(shape_size(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
  if (shape_size(shape_) != data_.size()) {
    throw Error(ErrorCode::kShapeMismatch, "shape " + shape_string(shape_) + " needs " +
                                               std::to_string(shape_size(shape_)) + " values, got " +
                                               std::to_string(data_.size()));
  }
}

Tensor Tensor::reshaped(Shape shape) const {
  if (shape_size(shape) != data_.size()) {
    throw Error(ErrorCode::kShapeMismatch, "cannot reshape " + shape_string(shape_) + " to " + shape_string(shape));
  }
  return Tensor(std::move(shape), data_);
}

void Tensor::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

bool Tensor::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

void require_finite(const Tensor& t, std::string_view where) {
  if (!t.all_finite()) throw Error(ErrorCode::kNonFinite, "non-finite value in " + std::string(where));
}

}  // namespace afibkit::nn
