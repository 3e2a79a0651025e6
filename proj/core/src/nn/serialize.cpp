#include "afibkit/nn/serialize.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>

#include "afibkit/containers.hpp"
#include "afibkit/error.hpp"

namespace afibkit::nn {
namespace {

std::vector<Tensor*> layer_tensors(Layer& layer) {
  std::vector<Tensor*> out;
  for (Param* p : layer.params()) out.push_back(&p->value);
  for (Tensor* b : layer.buffers()) out.push_back(b);
  return out;
}

std::uint32_t read_u32(std::istream& in) {
  const std::uint32_t v = io::get_u32(in);
  if (!in) throw Error(ErrorCode::kMalformedContainer, "weights file truncated");
  return v;
}

}  // namespace

void save_weights(Network& net, std::ostream& out) {
  out.write(kWeightsMagic, sizeof kWeightsMagic);
  io::put_u32(out, kWeightsVersion);
  io::put_u32(out, static_cast<std::uint32_t>(net.size()));
  for (std::size_t i = 0; i < net.size(); ++i) {
    Layer& l = net.layer(i);
    const auto tensors = layer_tensors(l);
    io::put_u32(out, static_cast<std::uint32_t>(l.kind()));
    io::put_u32(out, static_cast<std::uint32_t>(tensors.size()));
    for (const Tensor* t : tensors) {
      io::put_u32(out, static_cast<std::uint32_t>(t->rank()));
      for (std::size_t d : t->shape()) io::put_u32(out, static_cast<std::uint32_t>(d));
    }
  }
  for (std::size_t i = 0; i < net.size(); ++i) {
    for (const Tensor* t : layer_tensors(net.layer(i))) {
      for (double v : t->data()) io::put_f64(out, v);
    }
  }
  if (!out) throw Error(ErrorCode::kIoError, "failed writing weights");
}

void save_weights(Network& net, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIoError, "cannot open " + path.string() + " for writing");
  save_weights(net, out);
}

void load_weights(Network& net, std::istream& in) {
  char magic[sizeof kWeightsMagic] = {};
  in.read(magic, sizeof magic);
  if (!in || !std::equal(std::begin(magic), std::end(magic), std::begin(kWeightsMagic))) {
    throw Error(ErrorCode::kMalformedContainer, "not an afibkit weights file");
  }
  const std::uint32_t version = read_u32(in);
  if (version != kWeightsVersion) {
    throw Error(ErrorCode::kMalformedContainer, "unsupported weights version " + std::to_string(version));
  }
  const std::uint32_t layers = read_u32(in);
  if (layers != net.size()) {
    throw Error(ErrorCode::kShapeMismatch, "file has " + std::to_string(layers) + " layers, network has " +
                                               std::to_string(net.size()));
  }
  std::vector<Tensor*> targets;
  for (std::size_t i = 0; i < net.size(); ++i) {
    Layer& l = net.layer(i);
    const auto kind = read_u32(in);
    if (kind != static_cast<std::uint32_t>(l.kind())) {
      throw Error(ErrorCode::kShapeMismatch, "layer " + std::to_string(i) + " is " +
                                                 std::string(to_string(l.kind())) + " but file has kind " +
                                                 std::to_string(kind));
    }
    const auto tensors = layer_tensors(l);
    if (read_u32(in) != tensors.size()) {
      throw Error(ErrorCode::kShapeMismatch, "tensor count differs at layer " + std::to_string(i));
    }
    for (Tensor* t : tensors) {
      const std::uint32_t rank = read_u32(in);
      if (rank != t->rank()) {
        throw Error(ErrorCode::kShapeMismatch, "layer " + std::to_string(i) + " tensor rank " +
                                                   std::to_string(rank) + " vs " + std::to_string(t->rank()));
      }
      Shape shape(rank);
      for (auto& d : shape) d = read_u32(in);
      if (shape != t->shape()) {
        throw Error(ErrorCode::kShapeMismatch, "layer " + std::to_string(i) + " tensor " +
                                                   shape_string(shape) + " vs " + shape_string(t->shape()));
      }
      targets.push_back(t);
    }
  }
  // Stage the values so a truncated file leaves the network untouched.
  std::vector<std::vector<double>> staged;
  for (const Tensor* t : targets) {
    std::vector<double> vals(t->size());
    for (double& v : vals) v = io::get_f64(in);
    if (!in) throw Error(ErrorCode::kMalformedContainer, "weights file truncated");
    staged.push_back(std::move(vals));
  }
  for (std::size_t k = 0; k < targets.size(); ++k) {
    *targets[k] = Tensor(targets[k]->shape(), std::move(staged[k]));
  }
}

void load_weights(Network& net, const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  load_weights(net, in);
}

}  // namespace afibkit::nn
