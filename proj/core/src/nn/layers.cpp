#include "afibkit/nn/layers.hpp"

#include <algorithm>
#include <cmath>

#include "afibkit/error.hpp"
#include "afibkit/parallel.hpp"

namespace afibkit::nn {
namespace {

void require_rank(const Tensor& x, std::size_t rank, std::string_view who) {
  if (x.rank() != rank) {
    throw Error(ErrorCode::kShapeMismatch, std::string(who) + " expects rank " + std::to_string(rank) +
                                               " input, got " + shape_string(x.shape()));
  }
}

void require_same_shape(const Tensor& got, const Shape& want, std::string_view who) {
  if (got.shape() != want) {
    throw Error(ErrorCode::kShapeMismatch, std::string(who) + " gradient shape " + shape_string(got.shape()) +
                                               " != " + shape_string(want));
  }
}

void normal_init(Tensor& t, double stddev, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, stddev);
  for (double& v : t.data()) v = dist(rng);
}

Param make_param(std::string name, Shape shape) {
  Param p{std::move(name), Tensor(shape), Tensor(shape)};
  return p;
}

}  // namespace

std::string_view to_string(LayerKind kind) noexcept {
  switch (kind) {
    case LayerKind::kConv1d: return "conv1d";
    case LayerKind::kConv2d: return "conv2d";
    case LayerKind::kMaxPool1d: return "maxpool1d";
    case LayerKind::kMaxPool2d: return "maxpool2d";
    case LayerKind::kBatchNorm: return "batchnorm";
    case LayerKind::kDropout: return "dropout";
    case LayerKind::kDense: return "dense";
    case LayerKind::kRelu: return "relu";
    case LayerKind::kSigmoid: return "sigmoid";
    case LayerKind::kFlatten: return "flatten";
    case LayerKind::kTemporalMean: return "temporal_mean";
  }
  return "unknown";
}

Tensor Layer::forward(const Tensor& x, Mode mode) {
  Tensor y = do_forward(x, mode);
  has_forward_ = true;
  return y;
}

Tensor Layer::backward(const Tensor& grad_out) {
  if (!has_forward_) {
    throw Error(ErrorCode::kStaleForward, std::string(to_string(kind())) + " backward without a matching forward");
  }
  has_forward_ = false;
  return do_backward(grad_out);
}

// ---------------------------------------------------------------- Conv1d

Conv1d::Conv1d(std::size_t in_channels, std::size_t out_channels, std::size_t kernel, std::size_t padding,
               bool bias)
    : in_(in_channels),
      out_(out_channels),
      kernel_(kernel),
      pad_(padding == kSamePadding ? (kernel - 1) / 2 : padding),
      use_bias_(bias),
      weight_(make_param("weight", {out_channels, in_channels, kernel})),
      bias_(make_param("bias", {out_channels})) {
  if (in_ == 0 || out_ == 0 || kernel_ == 0) throw Error(ErrorCode::kInvalidConfig, "conv1d dims must be positive");
}

Shape Conv1d::output_shape(const Shape& input) const {
  if (input.size() != 2 || input[0] != in_ || input[1] + 2 * pad_ < kernel_) {
    throw Error(ErrorCode::kShapeMismatch, describe() + " cannot take " + shape_string(input));
  }
  return {out_, input[1] + 2 * pad_ - kernel_ + 1};
}

std::string Conv1d::describe() const {
  return "conv1d(" + std::to_string(in_) + "->" + std::to_string(out_) + ",k=" + std::to_string(kernel_) +
         ",pad=" + std::to_string(pad_) + (use_bias_ ? "" : ",nobias") + ")";
}

std::vector<Param*> Conv1d::params() {
  if (use_bias_) return {&weight_, &bias_};
  return {&weight_};
}

void Conv1d::reset_parameters(std::mt19937_64& rng) {
  normal_init(weight_.value, std::sqrt(2.0 / static_cast<double>(in_ * kernel_)), rng);
  bias_.value.fill(0.0);
}

Tensor Conv1d::do_forward(const Tensor& x, Mode) {
  require_rank(x, 3, "conv1d");
  const Shape out_sample = output_shape({x.dim(1), x.dim(2)});
  const std::size_t batch = x.dim(0);
  const auto len = static_cast<std::ptrdiff_t>(x.dim(2));
  const auto out_len = static_cast<std::ptrdiff_t>(out_sample[1]);
  const auto pad = static_cast<std::ptrdiff_t>(pad_);
  Tensor y({batch, out_, out_sample[1]});

  const double* xp = x.raw();
  const double* wp = weight_.value.raw();
  const double* bp = bias_.value.raw();
  double* yp = y.raw();
  parallel_for(0, batch * out_, [&](std::size_t idx) {
    const std::size_t b = idx / out_;
    const std::size_t co = idx % out_;
    double* yrow = yp + idx * static_cast<std::size_t>(out_len);
    std::fill(yrow, yrow + out_len, use_bias_ ? bp[co] : 0.0);
    for (std::size_t ci = 0; ci < in_; ++ci) {
      const double* xrow = xp + (b * in_ + ci) * static_cast<std::size_t>(len);
      const double* w = wp + (co * in_ + ci) * kernel_;
      for (std::size_t kk = 0; kk < kernel_; ++kk) {
        const double wv = w[kk];
        const std::ptrdiff_t off = static_cast<std::ptrdiff_t>(kk) - pad;
        const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, -off);
        const std::ptrdiff_t hi = std::min(out_len, len - off);
        for (std::ptrdiff_t p = lo; p < hi; ++p) yrow[p] += wv * xrow[p + off];
      }
    }
  });
  input_ = x;
  return y;
}

Tensor Conv1d::do_backward(const Tensor& grad_out) {
  const std::size_t batch = input_.dim(0);
  const auto len = static_cast<std::ptrdiff_t>(input_.dim(2));
  const Shape out_sample = output_shape({in_, input_.dim(2)});
  require_same_shape(grad_out, {batch, out_, out_sample[1]}, "conv1d");
  const auto out_len = static_cast<std::ptrdiff_t>(out_sample[1]);
  const auto pad = static_cast<std::ptrdiff_t>(pad_);

  const double* xp = input_.raw();
  const double* gp = grad_out.raw();
  const double* wp = weight_.value.raw();
  double* gw = weight_.grad.raw();
  double* gb = bias_.grad.raw();

  Tensor dx(input_.shape());
  double* dxp = dx.raw();
  parallel_for(0, batch * in_, [&](std::size_t idx) {
    const std::size_t b = idx / in_;
    const std::size_t ci = idx % in_;
    double* dxrow = dxp + idx * static_cast<std::size_t>(len);
    for (std::size_t co = 0; co < out_; ++co) {
      const double* grow = gp + (b * out_ + co) * static_cast<std::size_t>(out_len);
      const double* w = wp + (co * in_ + ci) * kernel_;
      for (std::size_t kk = 0; kk < kernel_; ++kk) {
        const double wv = w[kk];
        const std::ptrdiff_t off = static_cast<std::ptrdiff_t>(kk) - pad;
        const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, -off);
        const std::ptrdiff_t hi = std::min(out_len, len - off);
        for (std::ptrdiff_t p = lo; p < hi; ++p) dxrow[p + off] += wv * grow[p];
      }
    }
  });

  parallel_for(0, out_, [&](std::size_t co) {
    for (std::size_t ci = 0; ci < in_; ++ci) {
      for (std::size_t kk = 0; kk < kernel_; ++kk) {
        const std::ptrdiff_t off = static_cast<std::ptrdiff_t>(kk) - pad;
        const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, -off);
        const std::ptrdiff_t hi = std::min(out_len, len - off);
        double acc = 0.0;
        for (std::size_t b = 0; b < batch; ++b) {
          const double* grow = gp + (b * out_ + co) * static_cast<std::size_t>(out_len);
          const double* xrow = xp + (b * in_ + ci) * static_cast<std::size_t>(len);
          for (std::ptrdiff_t p = lo; p < hi; ++p) acc += grow[p] * xrow[p + off];
        }
        gw[(co * in_ + ci) * kernel_ + kk] += acc;
      }
    }
    if (use_bias_) {
      double acc = 0.0;
      for (std::size_t b = 0; b < batch; ++b) {
        const double* grow = gp + (b * out_ + co) * static_cast<std::size_t>(out_len);
        for (std::ptrdiff_t p = 0; p < out_len; ++p) acc += grow[p];
      }
      gb[co] += acc;
    }
  });
  input_ = Tensor();
  return dx;
}

// ---------------------------------------------------------------- Conv2d

Conv2d::Conv2d(std::size_t in_channels, std::size_t out_channels, std::size_t kernel_h, std::size_t kernel_w,
               bool bias)
    : in_(in_channels),
      out_(out_channels),
      kh_(kernel_h),
      kw_(kernel_w),
      ph_((kernel_h - 1) / 2),
      pw_((kernel_w - 1) / 2),
      use_bias_(bias),
      weight_(make_param("weight", {out_channels, in_channels, kernel_h, kernel_w})),
      bias_(make_param("bias", {out_channels})) {
  if (in_ == 0 || out_ == 0 || kh_ == 0 || kw_ == 0) {
    throw Error(ErrorCode::kInvalidConfig, "conv2d dims must be positive");
  }
}

Shape Conv2d::output_shape(const Shape& input) const {
  if (input.size() != 3 || input[0] != in_ || input[1] + 2 * ph_ < kh_ || input[2] + 2 * pw_ < kw_) {
    throw Error(ErrorCode::kShapeMismatch, describe() + " cannot take " + shape_string(input));
  }
  return {out_, input[1] + 2 * ph_ - kh_ + 1, input[2] + 2 * pw_ - kw_ + 1};
}

std::string Conv2d::describe() const {
  return "conv2d(" + std::to_string(in_) + "->" + std::to_string(out_) + ",k=" + std::to_string(kh_) + "x" +
         std::to_string(kw_) + ",same" + (use_bias_ ? "" : ",nobias") + ")";
}

std::vector<Param*> Conv2d::params() {
  if (use_bias_) return {&weight_, &bias_};
  return {&weight_};
}

void Conv2d::reset_parameters(std::mt19937_64& rng) {
  normal_init(weight_.value, std::sqrt(2.0 / static_cast<double>(in_ * kh_ * kw_)), rng);
  bias_.value.fill(0.0);
}

Tensor Conv2d::do_forward(const Tensor& x, Mode) {
  require_rank(x, 4, "conv2d");
  const Shape os = output_shape({x.dim(1), x.dim(2), x.dim(3)});
  const std::size_t batch = x.dim(0);
  const auto H = static_cast<std::ptrdiff_t>(x.dim(2));
  const auto W = static_cast<std::ptrdiff_t>(x.dim(3));
  const auto OH = static_cast<std::ptrdiff_t>(os[1]);
  const auto OW = static_cast<std::ptrdiff_t>(os[2]);
  Tensor y({batch, out_, os[1], os[2]});

  const double* xp = x.raw();
  const double* wp = weight_.value.raw();
  const double* bp = bias_.value.raw();
  double* yp = y.raw();
  parallel_for(0, batch * out_, [&](std::size_t idx) {
    const std::size_t b = idx / out_;
    const std::size_t co = idx % out_;
    double* yplane = yp + idx * static_cast<std::size_t>(OH * OW);
    std::fill(yplane, yplane + OH * OW, use_bias_ ? bp[co] : 0.0);
    for (std::size_t ci = 0; ci < in_; ++ci) {
      const double* xplane = xp + (b * in_ + ci) * static_cast<std::size_t>(H * W);
      for (std::size_t u = 0; u < kh_; ++u) {
        const std::ptrdiff_t du = static_cast<std::ptrdiff_t>(u) - static_cast<std::ptrdiff_t>(ph_);
        const std::ptrdiff_t ilo = std::max<std::ptrdiff_t>(0, -du);
        const std::ptrdiff_t ihi = std::min(OH, H - du);
        for (std::size_t v = 0; v < kw_; ++v) {
          const double wv = wp[((co * in_ + ci) * kh_ + u) * kw_ + v];
          const std::ptrdiff_t dv = static_cast<std::ptrdiff_t>(v) - static_cast<std::ptrdiff_t>(pw_);
          const std::ptrdiff_t jlo = std::max<std::ptrdiff_t>(0, -dv);
          const std::ptrdiff_t jhi = std::min(OW, W - dv);
          for (std::ptrdiff_t i = ilo; i < ihi; ++i) {
            double* yrow = yplane + i * OW;
            const double* xrow = xplane + (i + du) * W + dv;
            for (std::ptrdiff_t j = jlo; j < jhi; ++j) yrow[j] += wv * xrow[j];
          }
        }
      }
    }
  });
  input_ = x;
  return y;
}

Tensor Conv2d::do_backward(const Tensor& grad_out) {
  const std::size_t batch = input_.dim(0);
  const Shape os = output_shape({in_, input_.dim(2), input_.dim(3)});
  require_same_shape(grad_out, {batch, out_, os[1], os[2]}, "conv2d");
  const auto H = static_cast<std::ptrdiff_t>(input_.dim(2));
  const auto W = static_cast<std::ptrdiff_t>(input_.dim(3));
  const auto OH = static_cast<std::ptrdiff_t>(os[1]);
  const auto OW = static_cast<std::ptrdiff_t>(os[2]);

  const double* xp = input_.raw();
  const double* gp = grad_out.raw();
  const double* wp = weight_.value.raw();
  double* gw = weight_.grad.raw();
  double* gb = bias_.grad.raw();

  Tensor dx(input_.shape());
  double* dxp = dx.raw();
  parallel_for(0, batch * in_, [&](std::size_t idx) {
    const std::size_t b = idx / in_;
    const std::size_t ci = idx % in_;
    double* dxplane = dxp + idx * static_cast<std::size_t>(H * W);
    for (std::size_t co = 0; co < out_; ++co) {
      const double* gplane = gp + (b * out_ + co) * static_cast<std::size_t>(OH * OW);
      for (std::size_t u = 0; u < kh_; ++u) {
        const std::ptrdiff_t du = static_cast<std::ptrdiff_t>(u) - static_cast<std::ptrdiff_t>(ph_);
        const std::ptrdiff_t ilo = std::max<std::ptrdiff_t>(0, -du);
        const std::ptrdiff_t ihi = std::min(OH, H - du);
        for (std::size_t v = 0; v < kw_; ++v) {
          const double wv = wp[((co * in_ + ci) * kh_ + u) * kw_ + v];
          const std::ptrdiff_t dv = static_cast<std::ptrdiff_t>(v) - static_cast<std::ptrdiff_t>(pw_);
          const std::ptrdiff_t jlo = std::max<std::ptrdiff_t>(0, -dv);
          const std::ptrdiff_t jhi = std::min(OW, W - dv);
          for (std::ptrdiff_t i = ilo; i < ihi; ++i) {
            const double* grow = gplane + i * OW;
            double* dxrow = dxplane + (i + du) * W + dv;
            for (std::ptrdiff_t j = jlo; j < jhi; ++j) dxrow[j] += wv * grow[j];
          }
        }
      }
    }
  });

  parallel_for(0, out_, [&](std::size_t co) {
    for (std::size_t ci = 0; ci < in_; ++ci) {
      for (std::size_t u = 0; u < kh_; ++u) {
        const std::ptrdiff_t du = static_cast<std::ptrdiff_t>(u) - static_cast<std::ptrdiff_t>(ph_);
        const std::ptrdiff_t ilo = std::max<std::ptrdiff_t>(0, -du);
        const std::ptrdiff_t ihi = std::min(OH, H - du);
        for (std::size_t v = 0; v < kw_; ++v) {
          const std::ptrdiff_t dv = static_cast<std::ptrdiff_t>(v) - static_cast<std::ptrdiff_t>(pw_);
          const std::ptrdiff_t jlo = std::max<std::ptrdiff_t>(0, -dv);
          const std::ptrdiff_t jhi = std::min(OW, W - dv);
          double acc = 0.0;
          for (std::size_t b = 0; b < batch; ++b) {
            const double* gplane = gp + (b * out_ + co) * static_cast<std::size_t>(OH * OW);
            const double* xplane = xp + (b * in_ + ci) * static_cast<std::size_t>(H * W);
            for (std::ptrdiff_t i = ilo; i < ihi; ++i) {
              const double* grow = gplane + i * OW;
              const double* xrow = xplane + (i + du) * W + dv;
              for (std::ptrdiff_t j = jlo; j < jhi; ++j) acc += grow[j] * xrow[j];
            }
          }
          gw[((co * in_ + ci) * kh_ + u) * kw_ + v] += acc;
        }
      }
    }
    if (use_bias_) {
      double acc = 0.0;
      for (std::size_t b = 0; b < batch; ++b) {
        const double* gplane = gp + (b * out_ + co) * static_cast<std::size_t>(OH * OW);
        for (std::ptrdiff_t k = 0; k < OH * OW; ++k) acc += gplane[k];
      }
      gb[co] += acc;
    }
  });
  input_ = Tensor();
  return dx;
}

// ---------------------------------------------------------------- MaxPool1d

MaxPool1d::MaxPool1d(std::size_t size, std::size_t stride) : size_(size), stride_(stride == 0 ? size : stride) {
  if (size_ == 0) throw Error(ErrorCode::kInvalidConfig, "pool size must be positive");
}

Shape MaxPool1d::output_shape(const Shape& input) const {
  if (input.size() != 2 || input[1] < size_) {
    throw Error(ErrorCode::kShapeMismatch, describe() + " cannot take " + shape_string(input));
  }
  return {input[0], (input[1] - size_) / stride_ + 1};
}

std::string MaxPool1d::describe() const {
  return "maxpool1d(" + std::to_string(size_) + ",stride=" + std::to_string(stride_) + ")";
}

Tensor MaxPool1d::do_forward(const Tensor& x, Mode) {
  require_rank(x, 3, "maxpool1d");
  const Shape os = output_shape({x.dim(1), x.dim(2)});
  const std::size_t rows = x.dim(0) * x.dim(1);
  const std::size_t len = x.dim(2);
  const std::size_t olen = os[1];
  Tensor y({x.dim(0), x.dim(1), olen});
  argmax_.assign(y.size(), 0);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t o = 0; o < olen; ++o) {
      std::size_t best = r * len + o * stride_;
      for (std::size_t k = 1; k < size_; ++k) {
        const std::size_t at = r * len + o * stride_ + k;
        if (x[at] > x[best]) best = at;
      }
      y[r * olen + o] = x[best];
      argmax_[r * olen + o] = best;
    }
  }
  input_shape_ = x.shape();
  return y;
}

Tensor MaxPool1d::do_backward(const Tensor& grad_out) {
  if (grad_out.size() != argmax_.size()) throw Error(ErrorCode::kShapeMismatch, "maxpool1d gradient size");
  Tensor dx(input_shape_);
  for (std::size_t o = 0; o < argmax_.size(); ++o) dx[argmax_[o]] += grad_out[o];
  return dx;
}

// ---------------------------------------------------------------- MaxPool2d

MaxPool2d::MaxPool2d(std::size_t size_h, std::size_t size_w) : sh_(size_h), sw_(size_w) {
  if (sh_ == 0 || sw_ == 0) throw Error(ErrorCode::kInvalidConfig, "pool size must be positive");
}

Shape MaxPool2d::output_shape(const Shape& input) const {
  if (input.size() != 3 || input[1] < sh_ || input[2] < sw_) {
    throw Error(ErrorCode::kShapeMismatch, describe() + " cannot take " + shape_string(input));
  }
  return {input[0], input[1] / sh_, input[2] / sw_};
}

std::string MaxPool2d::describe() const {
  return "maxpool2d(" + std::to_string(sh_) + "x" + std::to_string(sw_) + ")";
}

Tensor MaxPool2d::do_forward(const Tensor& x, Mode) {
  require_rank(x, 4, "maxpool2d");
  const Shape os = output_shape({x.dim(1), x.dim(2), x.dim(3)});
  const std::size_t planes = x.dim(0) * x.dim(1);
  const std::size_t H = x.dim(2), W = x.dim(3), OH = os[1], OW = os[2];
  Tensor y({x.dim(0), x.dim(1), OH, OW});
  argmax_.assign(y.size(), 0);
  for (std::size_t p = 0; p < planes; ++p) {
    for (std::size_t i = 0; i < OH; ++i) {
      for (std::size_t j = 0; j < OW; ++j) {
        std::size_t best = p * H * W + (i * sh_) * W + j * sw_;
        for (std::size_t u = 0; u < sh_; ++u) {
          for (std::size_t v = 0; v < sw_; ++v) {
            const std::size_t at = p * H * W + (i * sh_ + u) * W + j * sw_ + v;
            if (x[at] > x[best]) best = at;
          }
        }
        const std::size_t o = (p * OH + i) * OW + j;
        y[o] = x[best];
        argmax_[o] = best;
      }
    }
  }
  input_shape_ = x.shape();
  return y;
}

Tensor MaxPool2d::do_backward(const Tensor& grad_out) {
  if (grad_out.size() != argmax_.size()) throw Error(ErrorCode::kShapeMismatch, "maxpool2d gradient size");
  Tensor dx(input_shape_);
  for (std::size_t o = 0; o < argmax_.size(); ++o) dx[argmax_[o]] += grad_out[o];
  return dx;
}

// ---------------------------------------------------------------- BatchNorm

BatchNorm::BatchNorm(std::size_t channels, double epsilon, double momentum)
    : channels_(channels),
      eps_(epsilon),
      momentum_(momentum),
      gamma_(make_param("gamma", {channels})),
      beta_(make_param("beta", {channels})),
      running_mean_({channels}, 0.0),
      running_var_({channels}, 1.0) {
  gamma_.value.fill(1.0);
}

Shape BatchNorm::output_shape(const Shape& input) const {
  if (input.empty() || input[0] != channels_) {
    throw Error(ErrorCode::kShapeMismatch, describe() + " cannot take " + shape_string(input));
  }
  return input;
}

std::string BatchNorm::describe() const { return "batchnorm(" + std::to_string(channels_) + ")"; }

std::vector<Param*> BatchNorm::params() { return {&gamma_, &beta_}; }
std::vector<Tensor*> BatchNorm::buffers() { return {&running_mean_, &running_var_}; }

void BatchNorm::reset_parameters(std::mt19937_64&) {
  gamma_.value.fill(1.0);
  beta_.value.fill(0.0);
  running_mean_.fill(0.0);
  running_var_.fill(1.0);
}

Tensor BatchNorm::do_forward(const Tensor& x, Mode mode) {
  if (x.rank() < 2 || x.dim(1) != channels_) {
    throw Error(ErrorCode::kShapeMismatch, describe() + " cannot take " + shape_string(x.shape()));
  }
  const std::size_t batch = x.dim(0);
  if (mode == Mode::kTrain && batch < 2) {
    throw Error(ErrorCode::kDegenerateBatch, "batch of " + std::to_string(batch) + " in training mode");
  }
  const std::size_t spatial = x.size() / (batch * channels_);
  const double count = static_cast<double>(batch * spatial);
  Tensor y(x.shape());
  xhat_ = Tensor(x.shape());
  inv_std_.assign(channels_, 0.0);
  mode_ = mode;

  parallel_for(0, channels_, [&](std::size_t c) {
    double mean = running_mean_[c];
    double var = running_var_[c];
    if (mode == Mode::kTrain) {
      double sum = 0.0;
      for (std::size_t b = 0; b < batch; ++b) {
        const double* row = x.raw() + (b * channels_ + c) * spatial;
        for (std::size_t s = 0; s < spatial; ++s) sum += row[s];
      }
      mean = sum / count;
      double sq = 0.0;
      for (std::size_t b = 0; b < batch; ++b) {
        const double* row = x.raw() + (b * channels_ + c) * spatial;
        for (std::size_t s = 0; s < spatial; ++s) sq += (row[s] - mean) * (row[s] - mean);
      }
      var = sq / count;
      running_mean_[c] = momentum_ * running_mean_[c] + (1.0 - momentum_) * mean;
      running_var_[c] = momentum_ * running_var_[c] + (1.0 - momentum_) * var;
    }
    const double inv = 1.0 / std::sqrt(var + eps_);
    inv_std_[c] = inv;
    const double g = gamma_.value[c];
    const double bta = beta_.value[c];
    for (std::size_t b = 0; b < batch; ++b) {
      const std::size_t base = (b * channels_ + c) * spatial;
      for (std::size_t s = 0; s < spatial; ++s) {
        const double xh = (x[base + s] - mean) * inv;
        xhat_[base + s] = xh;
        y[base + s] = g * xh + bta;
      }
    }
  });
  return y;
}

Tensor BatchNorm::do_backward(const Tensor& grad_out) {
  require_same_shape(grad_out, xhat_.shape(), "batchnorm");
  const std::size_t batch = xhat_.dim(0);
  const std::size_t spatial = xhat_.size() / (batch * channels_);
  const double count = static_cast<double>(batch * spatial);
  Tensor dx(xhat_.shape());

  parallel_for(0, channels_, [&](std::size_t c) {
    double sum_dy = 0.0;
    double sum_dy_xhat = 0.0;
    for (std::size_t b = 0; b < batch; ++b) {
      const std::size_t base = (b * channels_ + c) * spatial;
      for (std::size_t s = 0; s < spatial; ++s) {
        sum_dy += grad_out[base + s];
        sum_dy_xhat += grad_out[base + s] * xhat_[base + s];
      }
    }
    gamma_.grad[c] += sum_dy_xhat;
    beta_.grad[c] += sum_dy;
    const double scale = gamma_.value[c] * inv_std_[c];
    for (std::size_t b = 0; b < batch; ++b) {
      const std::size_t base = (b * channels_ + c) * spatial;
      for (std::size_t s = 0; s < spatial; ++s) {
        if (mode_ == Mode::kTrain) {
          dx[base + s] = scale * (grad_out[base + s] - sum_dy / count - xhat_[base + s] * sum_dy_xhat / count);
        } else {
          dx[base + s] = scale * grad_out[base + s];
        }
      }
    }
  });
  xhat_ = Tensor();
  return dx;
}

// ---------------------------------------------------------------- Dropout

Dropout::Dropout(double rate, std::uint64_t seed) : rate_(rate), rng_(seed) {
  if (!(rate >= 0.0 && rate < 1.0)) throw Error(ErrorCode::kInvalidConfig, "dropout rate must lie in [0, 1)");
}

std::string Dropout::describe() const { return "dropout(" + std::to_string(rate_) + ")"; }

Tensor Dropout::do_forward(const Tensor& x, Mode mode) {
  masked_ = mode == Mode::kTrain && rate_ > 0.0;
  if (!masked_) return x;
  if (!(frozen_ && mask_.shape() == x.shape())) {
    mask_ = Tensor(x.shape());
    const double keep_scale = 1.0 / (1.0 - rate_);
    for (double& m : mask_.data()) {
      // 53 random bits -> uniform in [0, 1).
      const double u = static_cast<double>(rng_() >> 11) * 0x1.0p-53;
      m = u >= rate_ ? keep_scale : 0.0;
    }
  }
  Tensor y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] * mask_[i];
  return y;
}

Tensor Dropout::do_backward(const Tensor& grad_out) {
  if (!masked_) return grad_out;
  require_same_shape(grad_out, mask_.shape(), "dropout");
  Tensor dx(grad_out.shape());
  for (std::size_t i = 0; i < dx.size(); ++i) dx[i] = grad_out[i] * mask_[i];
  return dx;
}

// ---------------------------------------------------------------- Dense

Dense::Dense(std::size_t in_features, std::size_t out_features)
    : in_(in_features),
      out_(out_features),
      weight_(make_param("weight", {out_features, in_features})),
      bias_(make_param("bias", {out_features})) {
  if (in_ == 0 || out_ == 0) throw Error(ErrorCode::kInvalidConfig, "dense dims must be positive");
}

Shape Dense::output_shape(const Shape& input) const {
  if (input.size() != 1 || input[0] != in_) {
    throw Error(ErrorCode::kShapeMismatch, describe() + " cannot take " + shape_string(input));
  }
  return {out_};
}

std::string Dense::describe() const {
  return "dense(" + std::to_string(in_) + "->" + std::to_string(out_) + ")";
}

std::vector<Param*> Dense::params() { return {&weight_, &bias_}; }

void Dense::reset_parameters(std::mt19937_64& rng) {
  normal_init(weight_.value, std::sqrt(1.0 / static_cast<double>(in_)), rng);
  bias_.value.fill(0.0);
}

Tensor Dense::do_forward(const Tensor& x, Mode) {
  if (x.rank() != 2 || x.dim(1) != in_) {
    throw Error(ErrorCode::kShapeMismatch, describe() + " cannot take " + shape_string(x.shape()));
  }
  const std::size_t batch = x.dim(0);
  Tensor y({batch, out_});
  parallel_for(0, batch, [&](std::size_t b) {
    const double* xr = x.raw() + b * in_;
    for (std::size_t o = 0; o < out_; ++o) {
      const double* wr = weight_.value.raw() + o * in_;
      double acc = bias_.value[o];
      for (std::size_t i = 0; i < in_; ++i) acc += wr[i] * xr[i];
      y[b * out_ + o] = acc;
    }
  });
  input_ = x;
  return y;
}

Tensor Dense::do_backward(const Tensor& grad_out) {
  const std::size_t batch = input_.dim(0);
  require_same_shape(grad_out, {batch, out_}, "dense");
  Tensor dx({batch, in_});
  parallel_for(0, batch, [&](std::size_t b) {
    double* dxr = dx.raw() + b * in_;
    for (std::size_t o = 0; o < out_; ++o) {
      const double g = grad_out[b * out_ + o];
      const double* wr = weight_.value.raw() + o * in_;
      for (std::size_t i = 0; i < in_; ++i) dxr[i] += g * wr[i];
    }
  });
  parallel_for(0, out_, [&](std::size_t o) {
    double* gw = weight_.grad.raw() + o * in_;
    double gb = 0.0;
    for (std::size_t b = 0; b < batch; ++b) {
      const double g = grad_out[b * out_ + o];
      const double* xr = input_.raw() + b * in_;
      for (std::size_t i = 0; i < in_; ++i) gw[i] += g * xr[i];
      gb += g;
    }
    bias_.grad[o] += gb;
  });
  input_ = Tensor();
  return dx;
}

// ---------------------------------------------------------------- activations

Tensor Relu::do_forward(const Tensor& x, Mode) {
  Tensor y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
  input_ = x;
  return y;
}

Tensor Relu::do_backward(const Tensor& grad_out) {
  require_same_shape(grad_out, input_.shape(), "relu");
  Tensor dx(grad_out.shape());
  for (std::size_t i = 0; i < dx.size(); ++i) dx[i] = input_[i] > 0.0 ? grad_out[i] : 0.0;
  input_ = Tensor();
  return dx;
}

Tensor Sigmoid::do_forward(const Tensor& x, Mode) {
  Tensor y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double z = x[i];
    y[i] = z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
  }
  output_ = y;
  return y;
}

Tensor Sigmoid::do_backward(const Tensor& grad_out) {
  require_same_shape(grad_out, output_.shape(), "sigmoid");
  Tensor dx(grad_out.shape());
  for (std::size_t i = 0; i < dx.size(); ++i) dx[i] = grad_out[i] * output_[i] * (1.0 - output_[i]);
  output_ = Tensor();
  return dx;
}

// ---------------------------------------------------------------- reshaping

Shape Flatten::output_shape(const Shape& input) const {
  if (mode_ == FlattenMode::kAll) {
    if (input.empty()) throw Error(ErrorCode::kShapeMismatch, "flatten of a scalar");
    return {shape_size(input)};
  }
  if (input.size() != 3) {
    throw Error(ErrorCode::kShapeMismatch, describe() + " cannot take " + shape_string(input));
  }
  return {input[0], input[2]};
}

std::string Flatten::describe() const {
  return mode_ == FlattenMode::kAll ? "flatten" : "flatten(mean_over_frequency)";
}

Tensor Flatten::do_forward(const Tensor& x, Mode) {
  if (x.rank() < 2) throw Error(ErrorCode::kShapeMismatch, "flatten needs a batch axis");
  input_shape_ = x.shape();
  const Shape sample(x.shape().begin() + 1, x.shape().end());
  const Shape os = output_shape(sample);
  if (mode_ == FlattenMode::kAll) return x.reshaped({x.dim(0), os[0]});

  const std::size_t batch = x.dim(0), C = x.dim(1), F = x.dim(2), T = x.dim(3);
  Tensor y({batch, C, T});
  for (std::size_t bc = 0; bc < batch * C; ++bc) {
    for (std::size_t f = 0; f < F; ++f) {
      for (std::size_t t = 0; t < T; ++t) y[bc * T + t] += x[(bc * F + f) * T + t];
    }
    for (std::size_t t = 0; t < T; ++t) y[bc * T + t] /= static_cast<double>(F);
  }
  return y;
}

Tensor Flatten::do_backward(const Tensor& grad_out) {
  if (mode_ == FlattenMode::kAll) return grad_out.reshaped(input_shape_);
  const std::size_t batch = input_shape_[0], C = input_shape_[1], F = input_shape_[2], T = input_shape_[3];
  require_same_shape(grad_out, {batch, C, T}, "flatten");
  Tensor dx(input_shape_);
  for (std::size_t bc = 0; bc < batch * C; ++bc) {
    for (std::size_t f = 0; f < F; ++f) {
      for (std::size_t t = 0; t < T; ++t) dx[(bc * F + f) * T + t] = grad_out[bc * T + t] / static_cast<double>(F);
    }
  }
  return dx;
}

Shape TemporalMean::output_shape(const Shape& input) const {
  if (input.size() != 2 || input[1] == 0) {
    throw Error(ErrorCode::kShapeMismatch, "temporal_mean cannot take " + shape_string(input));
  }
  return {input[0]};
}

Tensor TemporalMean::do_forward(const Tensor& x, Mode) {
  require_rank(x, 3, "temporal_mean");
  (void)output_shape({x.dim(1), x.dim(2)});
  const std::size_t rows = x.dim(0) * x.dim(1);
  const std::size_t T = x.dim(2);
  Tensor y({x.dim(0), x.dim(1)});
  for (std::size_t r = 0; r < rows; ++r) {
    double acc = 0.0;
    for (std::size_t t = 0; t < T; ++t) acc += x[r * T + t];
    y[r] = acc / static_cast<double>(T);
  }
  input_shape_ = x.shape();
  return y;
}

Tensor TemporalMean::do_backward(const Tensor& grad_out) {
  require_same_shape(grad_out, {input_shape_[0], input_shape_[1]}, "temporal_mean");
  const std::size_t T = input_shape_[2];
  Tensor dx(input_shape_);
  for (std::size_t r = 0; r < grad_out.size(); ++r) {
    for (std::size_t t = 0; t < T; ++t) dx[r * T + t] = grad_out[r] / static_cast<double>(T);
  }
  return dx;
}

}  // namespace afibkit::nn
