#include "afibkit/nn/network.hpp"

#include <random>
#include <string>

#include "afibkit/error.hpp"

namespace afibkit::nn {

Layer& Network::add(std::unique_ptr<Layer> layer) {
  layers_.push_back(std::move(layer));
  return *layers_.back();
}

Tensor Network::forward(const Tensor& x, Mode mode) {
  require_finite(x, "network input");
  Tensor h = x;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    h = layers_[i]->forward(h, mode);
    require_finite(h, std::to_string(i) + ":" + layers_[i]->describe());
  }
  reached_ = layers_.size();
  return h;
}

Tensor Network::forward_logits(const Tensor& x, Mode mode) {
  std::size_t end = layers_.size();
  if (end > 0 && layers_.back()->kind() == LayerKind::kSigmoid) --end;
  require_finite(x, "network input");
  Tensor h = x;
  for (std::size_t i = 0; i < end; ++i) {
    h = layers_[i]->forward(h, mode);
    require_finite(h, std::to_string(i) + ":" + layers_[i]->describe());
  }
  reached_ = end;
  return h;
}

Tensor Network::backward(const Tensor& grad_out) {
  if (reached_ == 0 && !layers_.empty()) {
    throw Error(ErrorCode::kStaleForward, "network backward without a matching forward");
  }
  Tensor g = grad_out;
  for (std::size_t i = reached_; i-- > 0;) {
    g = layers_[i]->backward(g);
    require_finite(g, "gradient at " + std::to_string(i) + ":" + layers_[i]->describe());
  }
  reached_ = 0;
  return g;
}

std::vector<Param*> Network::params() {
  std::vector<Param*> out;
  for (auto& l : layers_) {
    for (Param* p : l->params()) out.push_back(p);
  }
  return out;
}

std::vector<Tensor*> Network::buffers() {
  std::vector<Tensor*> out;
  for (auto& l : layers_) {
    for (Tensor* b : l->buffers()) out.push_back(b);
  }
  return out;
}

std::size_t Network::parameter_count() {
  std::size_t n = 0;
  for (Param* p : params()) n += p->value.size();
  return n;
}

void Network::zero_grad() {
  for (Param* p : params()) p->grad.fill(0.0);
}

void Network::initialize(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (auto& l : layers_) l->reset_parameters(rng);
  zero_grad();
}

void Network::set_dropout_frozen(bool frozen) {
  for (auto& l : layers_) {
    if (auto* d = dynamic_cast<Dropout*>(l.get())) d->set_frozen(frozen);
  }
}

}  // namespace afibkit::nn
