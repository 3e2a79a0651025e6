#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "afibkit/nn/layers.hpp"

namespace afibkit::nn {

// A sequential stack of layers. Not thread-safe: forward() stores per-layer
// records that the following backward() consumes.
class Network {
 public:
  Network() = default;
  Network(Network&&) noexcept = default;
  Network& operator=(Network&&) noexcept = default;

  Layer& add(std::unique_ptr<Layer> layer);
  template <typename L, typename... Args>
  L& emplace(Args&&... args) {
    return static_cast<L&>(add(std::make_unique<L>(std::forward<Args>(args)...)));
  }

  std::size_t size() const noexcept { return layers_.size(); }
  Layer& layer(std::size_t i) { return *layers_.at(i); }
  const Layer& layer(std::size_t i) const { return *layers_.at(i); }

  Tensor forward(const Tensor& x, Mode mode);
  // Forward pass that stops before a trailing Sigmoid, for the stable BCE.
  Tensor forward_logits(const Tensor& x, Mode mode);
  // Backpropagates from the last layer reached by the preceding forward.
  Tensor backward(const Tensor& grad_out);

  std::vector<Param*> params();
  std::vector<Tensor*> buffers();
  std::size_t parameter_count();
  void zero_grad();
  void initialize(std::uint64_t seed);
  void set_dropout_frozen(bool frozen);

 private:
  std::vector<std::unique_ptr<Layer>> layers_;
  std::size_t reached_ = 0;  // layers touched by the last forward
};

}  // namespace afibkit::nn
