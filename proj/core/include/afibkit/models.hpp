#pragma once

// The two classifiers and their training loop.
//
// cnn1d: 10 x [conv1d k5 -> batchnorm -> relu -> maxpool 2 -> dropout 0.2],
//        channels 16,16,32,32,64,64,128,128,256,256; flatten -> dense(1) -> sigmoid.
// cnn2d: 8 x [conv2d 3x3 -> batchnorm -> relu] (the 24 counted layers),
//        channels 8,8,16,16,32,32,64,64, 2x2 max pool after blocks 2, 4, 6;
//        mean over frequency -> mean over time -> dense(1) -> sigmoid.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "afibkit/containers.hpp"
#include "afibkit/eval.hpp"
#include "afibkit/nn/adam.hpp"
#include "afibkit/nn/network.hpp"

namespace afibkit::models {

enum class ModelKind { kCnn1d, kCnn2d };
std::string_view to_string(ModelKind kind) noexcept;

inline constexpr std::size_t kCnn1dMinLength = 1024;
inline constexpr std::size_t kCnn2dMinFreqBins = 16;
inline constexpr std::size_t kCnn2dMinFrames = 4;

struct LayerSpec {
  nn::LayerKind kind{};
  // conv1d: in, out, kernel; conv2d: in, out, kh, kw; maxpool: sizes;
  // batchnorm: channels; dense: in, out; flatten: mode
  std::vector<std::size_t> args;
  double rate = 0.0;  // dropout
  bool bias = true;   // conv layers
  bool counted = false;
  nn::Shape output_shape;  // per sample
};

struct ModelSpec {
  ModelKind kind{};
  nn::Shape input_shape;  // per sample, channel axis first
  std::vector<LayerSpec> layers;

  std::size_t count(nn::LayerKind k) const;
  std::size_t counted_layers() const;
  std::string manifest() const;  // one line per layer
};

ModelSpec build_cnn1d(std::size_t input_len);
ModelSpec build_cnn2d(std::size_t freq_bins, std::size_t time_frames);

// Fresh network with weights drawn from `seed`; dropout streams derive from it too.
nn::Network instantiate(const ModelSpec& spec, std::uint64_t seed);

// Samples stored contiguously, each with shape `sample_shape`.
struct Dataset {
  nn::Shape sample_shape;
  std::vector<double> values;
  std::vector<int> labels;

  std::size_t size() const noexcept { return labels.size(); }
  std::size_t sample_size() const noexcept { return nn::shape_size(sample_shape); }
};

// Rank-1 containers become [1, L] samples, rank-2 containers [1, rows, cols].
Dataset dataset_from_container(const io::Container& c);

struct EpochRow {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double train_acc = 0.0;
  double val_loss = 0.0;
  double val_acc = 0.0;
};

struct TrainConfig {
  std::size_t epochs = 100;
  std::size_t batch_size = 128;
  std::uint64_t seed = 42;
  double lr = 1e-3;
  // Called after each epoch, e.g. to stream curves to disk.
  std::function<void(const EpochRow&)> on_epoch;

  void validate() const;  // InvalidConfig on epochs == 0, batch_size == 0, lr <= 0
};

TrainConfig default_train_config(ModelKind kind);

// Gathers samples `idx` into a batch tensor and a [B, 1] label tensor.
std::pair<nn::Tensor, nn::Tensor> make_batch(const Dataset& d, std::span<const std::size_t> idx);

// Forward + BCE + backward + one Adam update; returns the batch loss. When
// `correct` is given it receives the number of right predictions in the batch.
double train_step(nn::Network& net, nn::Adam& opt, const nn::Tensor& x, const nn::Tensor& y,
                  std::size_t* correct = nullptr);

// Mini-batch boundaries over n samples; a trailing batch of one is folded
// into its predecessor so batchnorm always sees at least two samples.
std::vector<std::pair<std::size_t, std::size_t>> batch_ranges(std::size_t n, std::size_t batch_size);

// Trains in place. Epoch rows hold the mean training-batch loss/accuracy
// and inference-mode loss/accuracy on `val`.
std::vector<EpochRow> train(nn::Network& net, const Dataset& train_set, const Dataset& val,
                            const TrainConfig& cfg);

struct Inference {
  std::vector<double> probabilities;
  double loss = 0.0;      // mean BCE
  double accuracy = 0.0;  // at threshold 0.5
};
Inference infer(nn::Network& net, const Dataset& d, std::size_t batch_size = 64);

std::vector<int> classify(std::span<const double> probabilities, double threshold = 0.5);

eval::Metrics evaluate(nn::Network& net, const Dataset& d, double threshold = 0.5);

void write_curves_header(std::ostream& out);
void write_curve_row(std::ostream& out, const EpochRow& row);

}  // namespace afibkit::models
