#include "afibkit/models.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <random>

#include "afibkit/error.hpp"
#include "afibkit/nn/loss.hpp"
#include "afibkit/signal_prep.hpp"

namespace afibkit::models {
namespace {

using nn::LayerKind;
using nn::Shape;

constexpr std::size_t kCnn1dChannels[] = {16, 16, 32, 32, 64, 64, 128, 128, 256, 256};
constexpr std::size_t kCnn2dChannels[] = {8, 8, 16, 16, 32, 32, 64, 64};
constexpr std::size_t kCnn1dKernel = 5;
constexpr double kCnn1dDropout = 0.2;

LayerSpec spec(LayerKind kind, std::vector<std::size_t> args, Shape out, bool counted = false) {
  LayerSpec s;
  s.kind = kind;
  s.args = std::move(args);
  s.output_shape = std::move(out);
  s.counted = counted;
  return s;
}

std::unique_ptr<nn::Layer> make_layer(const LayerSpec& s, std::uint64_t dropout_seed) {
  const auto& a = s.args;
  switch (s.kind) {
    case LayerKind::kConv1d: return std::make_unique<nn::Conv1d>(a[0], a[1], a[2], nn::kSamePadding, s.bias);
    case LayerKind::kConv2d: return std::make_unique<nn::Conv2d>(a[0], a[1], a[2], a[3], s.bias);
    case LayerKind::kMaxPool1d: return std::make_unique<nn::MaxPool1d>(a[0]);
    case LayerKind::kMaxPool2d: return std::make_unique<nn::MaxPool2d>(a[0], a[1]);
    case LayerKind::kBatchNorm: return std::make_unique<nn::BatchNorm>(a[0]);
    case LayerKind::kDropout: return std::make_unique<nn::Dropout>(s.rate, dropout_seed);
    case LayerKind::kDense: return std::make_unique<nn::Dense>(a[0], a[1]);
    case LayerKind::kRelu: return std::make_unique<nn::Relu>();
    case LayerKind::kSigmoid: return std::make_unique<nn::Sigmoid>();
    case LayerKind::kFlatten: return std::make_unique<nn::Flatten>(static_cast<nn::FlattenMode>(a.at(0)));
    case LayerKind::kTemporalMean: return std::make_unique<nn::TemporalMean>();
  }
  throw Error(ErrorCode::kInvalidConfig, "unknown layer kind");
}

}  // namespace

std::string_view to_string(ModelKind kind) noexcept { return kind == ModelKind::kCnn1d ? "cnn1d" : "cnn2d"; }

std::size_t ModelSpec::count(LayerKind k) const {
  return static_cast<std::size_t>(
      std::count_if(layers.begin(), layers.end(), [k](const LayerSpec& l) { return l.kind == k; }));
}

std::size_t ModelSpec::counted_layers() const {
  return static_cast<std::size_t>(
      std::count_if(layers.begin(), layers.end(), [](const LayerSpec& l) { return l.counted; }));
}

std::string ModelSpec::manifest() const {
  std::string out = std::string(to_string(kind)) + " input " + nn::shape_string(input_shape) + "\n";
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& l = layers[i];
    out += std::to_string(i) + " " + std::string(nn::to_string(l.kind)) + " -> " +
           nn::shape_string(l.output_shape) + (l.counted ? " [counted]" : "") + "\n";
  }
  return out;
}

ModelSpec build_cnn1d(std::size_t input_len) {
  if (input_len < kCnn1dMinLength) {
    throw Error(ErrorCode::kInputTooShort, "cnn1d needs >= " + std::to_string(kCnn1dMinLength) +
                                               " samples, got " + std::to_string(input_len));
  }
  ModelSpec m{ModelKind::kCnn1d, {1, input_len}, {}};
  std::size_t ch = 1;
  std::size_t len = input_len;
  for (std::size_t out : kCnn1dChannels) {
    auto conv = spec(LayerKind::kConv1d, {ch, out, kCnn1dKernel}, {out, len}, true);
    conv.bias = false;  // batchnorm's beta supplies the offset
    m.layers.push_back(conv);
    m.layers.push_back(spec(LayerKind::kBatchNorm, {out}, {out, len}));
    m.layers.push_back(spec(LayerKind::kRelu, {}, {out, len}));
    len /= 2;
    m.layers.push_back(spec(LayerKind::kMaxPool1d, {2}, {out, len}));
    auto drop = spec(LayerKind::kDropout, {}, {out, len});
    drop.rate = kCnn1dDropout;
    m.layers.push_back(drop);
    ch = out;
  }
  const std::size_t features = ch * len;
  m.layers.push_back(spec(LayerKind::kFlatten, {static_cast<std::size_t>(nn::FlattenMode::kAll)}, {features}));
  m.layers.push_back(spec(LayerKind::kDense, {features, 1}, {1}));
  m.layers.push_back(spec(LayerKind::kSigmoid, {}, {1}));
  return m;
}

ModelSpec build_cnn2d(std::size_t freq_bins, std::size_t time_frames) {
  if (freq_bins < kCnn2dMinFreqBins || time_frames < kCnn2dMinFrames) {
    throw Error(ErrorCode::kInputTooSmall, "cnn2d needs >= " + std::to_string(kCnn2dMinFreqBins) + "x" +
                                               std::to_string(kCnn2dMinFrames) + ", got " +
                                               std::to_string(freq_bins) + "x" + std::to_string(time_frames));
  }
  ModelSpec m{ModelKind::kCnn2d, {1, freq_bins, time_frames}, {}};
  std::size_t ch = 1, f = freq_bins, t = time_frames;
  for (std::size_t block = 0; block < std::size(kCnn2dChannels); ++block) {
    const std::size_t out = kCnn2dChannels[block];
    auto conv = spec(LayerKind::kConv2d, {ch, out, 3, 3}, {out, f, t}, true);
    conv.bias = false;
    m.layers.push_back(conv);
    m.layers.push_back(spec(LayerKind::kBatchNorm, {out}, {out, f, t}, true));
    m.layers.push_back(spec(LayerKind::kRelu, {}, {out, f, t}, true));
    ch = out;
    if (block == 1 || block == 3 || block == 5) {
      // Short inputs stop pooling along time once a single frame is left.
      const std::size_t pw = t >= 2 ? 2 : 1;
      f /= 2;
      t /= pw;
      m.layers.push_back(spec(LayerKind::kMaxPool2d, {2, pw}, {out, f, t}));
    }
  }
  m.layers.push_back(
      spec(LayerKind::kFlatten, {static_cast<std::size_t>(nn::FlattenMode::kCollapseFrequency)}, {ch, t}));
  m.layers.push_back(spec(LayerKind::kTemporalMean, {}, {ch}));
  m.layers.push_back(spec(LayerKind::kDense, {ch, 1}, {1}));
  m.layers.push_back(spec(LayerKind::kSigmoid, {}, {1}));
  return m;
}

nn::Network instantiate(const ModelSpec& spec, std::uint64_t seed) {
  nn::Network net;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    net.add(make_layer(spec.layers[i], prep::derive_seed(seed, "dropout/" + std::to_string(i))));
  }
  net.initialize(seed);
  return net;
}

Dataset dataset_from_container(const io::Container& c) {
  if (c.items.empty()) throw Error(ErrorCode::kEmptyDataset, "container has no items");
  Dataset d;
  const auto& first = c.items.front();
  d.sample_shape = c.rank == 1 ? Shape{1, first.values.size()} : Shape{1, first.rows, first.cols};
  d.values.reserve(c.items.size() * first.values.size());
  for (const auto& item : c.items) {
    if (item.rows != first.rows || item.cols != first.cols || item.values.size() != first.values.size()) {
      throw Error(ErrorCode::kShapeMismatch, "container items differ in shape");
    }
    d.values.insert(d.values.end(), item.values.begin(), item.values.end());
    d.labels.push_back(item.label);
  }
  return d;
}

void TrainConfig::validate() const {
  if (epochs < 1) throw Error(ErrorCode::kInvalidConfig, "epochs must be >= 1");
  if (batch_size < 1) throw Error(ErrorCode::kInvalidConfig, "batch_size must be >= 1");
  if (!(lr > 0.0)) throw Error(ErrorCode::kInvalidConfig, "lr must be > 0");
}

TrainConfig default_train_config(ModelKind kind) {
  TrainConfig cfg;
  if (kind == ModelKind::kCnn2d) {
    cfg.epochs = 50;
    cfg.batch_size = 50;
  }
  return cfg;
}

std::pair<nn::Tensor, nn::Tensor> make_batch(const Dataset& d, std::span<const std::size_t> idx) {
  const std::size_t n = d.sample_size();
  Shape shape{idx.size()};
  shape.insert(shape.end(), d.sample_shape.begin(), d.sample_shape.end());
  nn::Tensor x(shape);
  nn::Tensor y({idx.size(), 1});
  for (std::size_t b = 0; b < idx.size(); ++b) {
    const std::size_t i = idx[b];
    std::copy_n(d.values.begin() + static_cast<std::ptrdiff_t>(i * n), n, x.raw() + b * n);
    y[b] = d.labels[i];
  }
  return {std::move(x), std::move(y)};
}

double train_step(nn::Network& net, nn::Adam& opt, const nn::Tensor& x, const nn::Tensor& y,
                  std::size_t* correct) {
  net.zero_grad();
  const nn::Tensor logits = net.forward_logits(x, nn::Mode::kTrain);
  const auto loss = nn::sigmoid_bce(logits, y);
  net.backward(loss.grad);
  opt.step(net.params());
  if (correct) {
    std::size_t c = 0;
    for (std::size_t i = 0; i < logits.size(); ++i) c += (logits[i] >= 0.0 ? 1 : 0) == static_cast<int>(y[i]);
    *correct = c;
  }
  return loss.loss;
}

std::vector<std::pair<std::size_t, std::size_t>> batch_ranges(std::size_t n, std::size_t batch_size) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t lo = 0; lo < n; lo += batch_size) out.emplace_back(lo, std::min(n, lo + batch_size));
  if (out.size() > 1 && out.back().second - out.back().first == 1) {
    out[out.size() - 2].second = n;
    out.pop_back();
  }
  return out;
}

std::vector<EpochRow> train(nn::Network& net, const Dataset& train_set, const Dataset& val,
                            const TrainConfig& cfg) {
  cfg.validate();
  if (train_set.size() == 0) throw Error(ErrorCode::kEmptyDataset, "empty training set");
  if (val.size() == 0) throw Error(ErrorCode::kEmptyDataset, "empty validation set");
  if (train_set.sample_shape != val.sample_shape) {
    throw Error(ErrorCode::kShapeMismatch, "train " + nn::shape_string(train_set.sample_shape) + " vs val " +
                                               nn::shape_string(val.sample_shape));
  }

  nn::Adam opt({cfg.lr});
  std::mt19937_64 rng(prep::derive_seed(cfg.seed, "shuffle"));
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);
  const auto ranges = batch_ranges(order.size(), cfg.batch_size);

  std::vector<EpochRow> rows;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (const auto& [lo, hi] : ranges) {
      const auto [x, y] = make_batch(train_set, std::span(order).subspan(lo, hi - lo));
      std::size_t c = 0;
      loss_sum += train_step(net, opt, x, y, &c) * static_cast<double>(hi - lo);
      correct += c;
    }
    const auto v = infer(net, val);
    EpochRow row{epoch, loss_sum / static_cast<double>(order.size()),
                 static_cast<double>(correct) / static_cast<double>(order.size()), v.loss, v.accuracy};
    rows.push_back(row);
    if (cfg.on_epoch) cfg.on_epoch(row);
  }
  return rows;
}

Inference infer(nn::Network& net, const Dataset& d, std::size_t batch_size) {
  if (d.size() == 0) throw Error(ErrorCode::kEmptyDataset, "nothing to evaluate");
  Inference r;
  r.probabilities.reserve(d.size());
  std::vector<std::size_t> idx(d.size());
  std::iota(idx.begin(), idx.end(), 0);
  double loss_sum = 0.0;
  std::size_t correct = 0;
  for (std::size_t lo = 0; lo < d.size(); lo += batch_size) {
    const std::size_t hi = std::min(d.size(), lo + batch_size);
    const auto [x, y] = make_batch(d, std::span(idx).subspan(lo, hi - lo));
    const nn::Tensor logits = net.forward_logits(x, nn::Mode::kInfer);
    loss_sum += nn::sigmoid_bce(logits, y).loss * static_cast<double>(hi - lo);
    for (std::size_t i = 0; i < logits.size(); ++i) {
      r.probabilities.push_back(nn::sigmoid(logits[i]));
      correct += (logits[i] >= 0.0 ? 1 : 0) == static_cast<int>(y[i]);
    }
  }
  r.loss = loss_sum / static_cast<double>(d.size());
  r.accuracy = static_cast<double>(correct) / static_cast<double>(d.size());
  return r;
}

std::vector<int> classify(std::span<const double> probabilities, double threshold) {
  std::vector<int> out(probabilities.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = probabilities[i] >= threshold ? 1 : 0;
  return out;
}

eval::Metrics evaluate(nn::Network& net, const Dataset& d, double threshold) {
  const auto r = infer(net, d);
  return eval::confusion(d.labels, classify(r.probabilities, threshold));
}

void write_curves_header(std::ostream& out) { out << "epoch,train_loss,train_acc,val_loss,val_acc\n"; }

void write_curve_row(std::ostream& out, const EpochRow& row) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%zu,%.10f,%.6f,%.10f,%.6f\n", row.epoch, row.train_loss, row.train_acc,
                row.val_loss, row.val_acc);
  out << buf;
}

}  // namespace afibkit::models
