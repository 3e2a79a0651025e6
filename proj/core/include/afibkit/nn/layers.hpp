#pragma once

// Sequential layer kinds. Every layer records what its backward pass needs
// during forward(); backward() consumes that record exactly once.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "afibkit/nn/tensor.hpp"

namespace afibkit::nn {

enum class LayerKind : std::uint32_t {
  kConv1d = 1,
  kConv2d = 2,
  kMaxPool1d = 3,
  kMaxPool2d = 4,
  kBatchNorm = 5,
  kDropout = 6,
  kDense = 7,
  kRelu = 8,
  kSigmoid = 9,
  kFlatten = 10,
  kTemporalMean = 11,
};

std::string_view to_string(LayerKind kind) noexcept;

enum class Mode { kTrain, kInfer };

struct Param {
  std::string name;
  Tensor value;
  Tensor grad;
};

class Layer {
 public:
  virtual ~Layer() = default;

  virtual LayerKind kind() const noexcept = 0;
  // Per-sample output shape (no batch axis) for a per-sample input shape.
  virtual Shape output_shape(const Shape& input) const = 0;
  virtual std::string describe() const { return std::string(to_string(kind())); }

  Tensor forward(const Tensor& x, Mode mode);
  // Accumulates parameter gradients and returns dL/dx. Throws StaleForward
  // unless a forward() happened since the previous backward().
  Tensor backward(const Tensor& grad_out);

  virtual std::vector<Param*> params() { return {}; }
  // Non-trainable state that is saved with the weights.
  virtual std::vector<Tensor*> buffers() { return {}; }
  virtual void reset_parameters(std::mt19937_64& /*rng*/) {}

 protected:
  virtual Tensor do_forward(const Tensor& x, Mode mode) = 0;
  virtual Tensor do_backward(const Tensor& grad_out) = 0;

 private:
  bool has_forward_ = false;
};

// Cross-correlation, stride 1. padding == kSamePadding gives (k - 1) / 2.
inline constexpr std::size_t kSamePadding = static_cast<std::size_t>(-1);

class Conv1d : public Layer {
 public:
  Conv1d(std::size_t in_channels, std::size_t out_channels, std::size_t kernel,
         std::size_t padding = kSamePadding, bool bias = true);

  LayerKind kind() const noexcept override { return LayerKind::kConv1d; }
  Shape output_shape(const Shape& input) const override;
  std::string describe() const override;
  std::vector<Param*> params() override;
  void reset_parameters(std::mt19937_64& rng) override;

  Param& weight() { return weight_; }
  Param& bias() { return bias_; }
  bool has_bias() const noexcept { return use_bias_; }

 protected:
  Tensor do_forward(const Tensor& x, Mode mode) override;
  Tensor do_backward(const Tensor& grad_out) override;

 private:
  std::size_t in_, out_, kernel_, pad_;
  bool use_bias_;
  Param weight_;  // [out, in, kernel]
  Param bias_;    // [out]
  Tensor input_;
};

class Conv2d : public Layer {
 public:
  Conv2d(std::size_t in_channels, std::size_t out_channels, std::size_t kernel_h, std::size_t kernel_w,
         bool bias = true);

  LayerKind kind() const noexcept override { return LayerKind::kConv2d; }
  Shape output_shape(const Shape& input) const override;
  std::string describe() const override;
  std::vector<Param*> params() override;
  void reset_parameters(std::mt19937_64& rng) override;

  Param& weight() { return weight_; }
  Param& bias() { return bias_; }

 protected:
  Tensor do_forward(const Tensor& x, Mode mode) override;
  Tensor do_backward(const Tensor& grad_out) override;

 private:
  std::size_t in_, out_, kh_, kw_, ph_, pw_;
  bool use_bias_;
  Param weight_;  // [out, in, kh, kw]
  Param bias_;
  Tensor input_;
};

// Floor semantics: a trailing partial window is dropped.
class MaxPool1d : public Layer {
 public:
  explicit MaxPool1d(std::size_t size = 2, std::size_t stride = 0);

  LayerKind kind() const noexcept override { return LayerKind::kMaxPool1d; }
  Shape output_shape(const Shape& input) const override;
  std::string describe() const override;
  const std::vector<std::size_t>& argmax() const noexcept { return argmax_; }

 protected:
  Tensor do_forward(const Tensor& x, Mode mode) override;
  Tensor do_backward(const Tensor& grad_out) override;

 private:
  std::size_t size_, stride_;
  Shape input_shape_;
  std::vector<std::size_t> argmax_;  // flat input index per output element
};

class MaxPool2d : public Layer {
 public:
  MaxPool2d(std::size_t size_h = 2, std::size_t size_w = 2);

  LayerKind kind() const noexcept override { return LayerKind::kMaxPool2d; }
  Shape output_shape(const Shape& input) const override;
  std::string describe() const override;

 protected:
  Tensor do_forward(const Tensor& x, Mode mode) override;
  Tensor do_backward(const Tensor& grad_out) override;

 private:
  std::size_t sh_, sw_;
  Shape input_shape_;
  std::vector<std::size_t> argmax_;
};

// Per-channel normalization over the batch and all spatial positions.
class BatchNorm : public Layer {
 public:
  explicit BatchNorm(std::size_t channels, double epsilon = 1e-5, double momentum = 0.9);

  LayerKind kind() const noexcept override { return LayerKind::kBatchNorm; }
  Shape output_shape(const Shape& input) const override;
  std::string describe() const override;
  std::vector<Param*> params() override;
  std::vector<Tensor*> buffers() override;
  void reset_parameters(std::mt19937_64& rng) override;

  Param& gamma() { return gamma_; }
  Param& beta() { return beta_; }
  const Tensor& running_mean() const { return running_mean_; }
  const Tensor& running_var() const { return running_var_; }

 protected:
  Tensor do_forward(const Tensor& x, Mode mode) override;
  Tensor do_backward(const Tensor& grad_out) override;

 private:
  std::size_t channels_;
  double eps_, momentum_;
  Param gamma_, beta_;
  Tensor running_mean_, running_var_;
  // forward record
  Mode mode_ = Mode::kInfer;
  Tensor xhat_;
  std::vector<double> inv_std_;
};

// Inverted dropout; inference is the identity and draws no random numbers.
class Dropout : public Layer {
 public:
  Dropout(double rate, std::uint64_t seed);

  LayerKind kind() const noexcept override { return LayerKind::kDropout; }
  Shape output_shape(const Shape& input) const override { return input; }
  std::string describe() const override;

  double rate() const noexcept { return rate_; }
  // While frozen, a training forward reuses the previous mask when shapes match.
  void set_frozen(bool frozen) noexcept { frozen_ = frozen; }

 protected:
  Tensor do_forward(const Tensor& x, Mode mode) override;
  Tensor do_backward(const Tensor& grad_out) override;

 private:
  double rate_;
  std::mt19937_64 rng_;
  bool frozen_ = false;
  bool masked_ = false;
  Tensor mask_;
};

class Dense : public Layer {
 public:
  Dense(std::size_t in_features, std::size_t out_features);

  LayerKind kind() const noexcept override { return LayerKind::kDense; }
  Shape output_shape(const Shape& input) const override;
  std::string describe() const override;
  std::vector<Param*> params() override;
  void reset_parameters(std::mt19937_64& rng) override;

  Param& weight() { return weight_; }
  Param& bias() { return bias_; }

 protected:
  Tensor do_forward(const Tensor& x, Mode mode) override;
  Tensor do_backward(const Tensor& grad_out) override;

 private:
  std::size_t in_, out_;
  Param weight_;  // [out, in]
  Param bias_;    // [out]
  Tensor input_;
};

class Relu : public Layer {
 public:
  LayerKind kind() const noexcept override { return LayerKind::kRelu; }
  Shape output_shape(const Shape& input) const override { return input; }

 protected:
  Tensor do_forward(const Tensor& x, Mode mode) override;
  Tensor do_backward(const Tensor& grad_out) override;

 private:
  Tensor input_;
};

class Sigmoid : public Layer {
 public:
  LayerKind kind() const noexcept override { return LayerKind::kSigmoid; }
  Shape output_shape(const Shape& input) const override { return input; }

 protected:
  Tensor do_forward(const Tensor& x, Mode mode) override;
  Tensor do_backward(const Tensor& grad_out) override;

 private:
  Tensor output_;
};

enum class FlattenMode : std::uint32_t {
  kAll = 0,              // [B, ...] -> [B, prod(...)]
  kCollapseFrequency = 1 // [B, C, F, T] -> [B, C, T], mean over F
};

class Flatten : public Layer {
 public:
  explicit Flatten(FlattenMode mode = FlattenMode::kAll) : mode_(mode) {}

  LayerKind kind() const noexcept override { return LayerKind::kFlatten; }
  Shape output_shape(const Shape& input) const override;
  std::string describe() const override;
  FlattenMode mode() const noexcept { return mode_; }

 protected:
  Tensor do_forward(const Tensor& x, Mode mode) override;
  Tensor do_backward(const Tensor& grad_out) override;

 private:
  FlattenMode mode_;
  Shape input_shape_;
};

// Mean over the last (time) axis: [B, C, T] -> [B, C].
class TemporalMean : public Layer {
 public:
  LayerKind kind() const noexcept override { return LayerKind::kTemporalMean; }
  Shape output_shape(const Shape& input) const override;

 protected:
  Tensor do_forward(const Tensor& x, Mode mode) override;
  Tensor do_backward(const Tensor& grad_out) override;

 private:
  Shape input_shape_;
};

}  // namespace afibkit::nn
