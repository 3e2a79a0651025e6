#include "afibkit/nn/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "afibkit/nn/loss.hpp"

namespace afibkit::nn {
namespace {

LossResult evaluate(Network& net, const Tensor& x, const Tensor& targets, GradcheckLoss loss) {
  if (loss == GradcheckLoss::kSigmoidBce) return sigmoid_bce(net.forward_logits(x, Mode::kTrain), targets);
  return squared_error(net.forward(x, Mode::kTrain), targets);
}

double relative_error(double a, double n) {
  return std::abs(a - n) / std::max({std::abs(a), std::abs(n), 1e-8});
}

}  // namespace

GradcheckResult gradcheck(Network& net, const Tensor& x, const Tensor& targets, GradcheckLoss loss,
                          double eps) {
  std::vector<Tensor> saved;
  for (Tensor* b : net.buffers()) saved.push_back(*b);
  auto restore = [&] {
    auto bufs = net.buffers();
    for (std::size_t i = 0; i < bufs.size(); ++i) *bufs[i] = saved[i];
  };
  net.set_dropout_frozen(true);

  Tensor probe_x = x;
  net.zero_grad();
  const LossResult base = evaluate(net, probe_x, targets, loss);
  const Tensor input_grad = net.backward(base.grad);

  GradcheckResult result;
  auto probe = [&](double& slot, double analytic, const std::string& label) {
    const double keep = slot;
    slot = keep + eps;
    restore();
    const double up = evaluate(net, probe_x, targets, loss).loss;
    slot = keep - eps;
    restore();
    const double down = evaluate(net, probe_x, targets, loss).loss;
    slot = keep;
    const double err = relative_error(analytic, (up - down) / (2.0 * eps));
    if (result.checked++ == 0 || err > result.max_error) {
      result.max_error = err;
      result.worst = label;
    }
  };

  for (Param* p : net.params()) {
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      probe(p->value[i], p->grad[i], p->name + "[" + std::to_string(i) + "]");
    }
  }
  for (std::size_t i = 0; i < probe_x.size(); ++i) {
    probe(probe_x[i], input_grad[i], "input[" + std::to_string(i) + "]");
  }

  restore();
  net.set_dropout_frozen(false);
  return result;
}

}  // namespace afibkit::nn
