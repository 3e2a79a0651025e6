#pragma once

// Weights file layout (all integers u32 little-endian):
//
//   magic "AFKWGHT\0", version (1), layer count
//   per layer: kind code, tensor count, then per tensor: rank, dims...
//   then every tensor's values as f64 little-endian, in manifest order
//   (each layer's parameters first, then its buffers).

#include <filesystem>
#include <iosfwd>

#include "afibkit/nn/network.hpp"

namespace afibkit::nn {

inline constexpr char kWeightsMagic[8] = {'A', 'F', 'K', 'W', 'G', 'H', 'T', '\0'};
inline constexpr std::uint32_t kWeightsVersion = 1;

void save_weights(Network& net, std::ostream& out);
void save_weights(Network& net, const std::filesystem::path& path);

// The network must already have the architecture recorded in the file;
// any kind or shape disagreement throws ShapeMismatch.
void load_weights(Network& net, std::istream& in);
void load_weights(Network& net, const std::filesystem::path& path);

}  // namespace afibkit::nn
