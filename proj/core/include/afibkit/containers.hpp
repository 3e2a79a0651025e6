#pragma once

// Binary container shared by segments (rank 1) and spectrograms (rank 2).
//
//   offset 0   8 bytes  magic "AFIBKIT\0"
//   offset 8   u32 LE   version (1)
//   offset 12  u32 LE   rank (1 = segment, 2 = spectrogram)
//   then per item:
//     u8      label (0/1)
//     u32 LE  L, the number of values
//     rank 2 only: u32 LE rows, u32 LE cols (rows * cols == L)
//     L x f64 little-endian values, row-major
//
// Provenance lives in a JSON sidecar manifest next to the container.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "afibkit/signal_prep.hpp"
#include "afibkit/spectro.hpp"

namespace afibkit::io {

inline constexpr char kContainerMagic[8] = {'A', 'F', 'I', 'B', 'K', 'I', 'T', '\0'};
inline constexpr std::uint32_t kContainerVersion = 1;

struct LabeledArray {
  int label = 0;
  std::size_t rows = 1;
  std::size_t cols = 0;
  std::vector<double> values;
};

struct Container {
  std::uint32_t rank = 1;
  std::vector<LabeledArray> items;
};

void write_container(std::ostream& out, const Container& c);
Container read_container(std::istream& in);
void write_container(const std::filesystem::path& path, const Container& c);
Container read_container(const std::filesystem::path& path);

Container to_container(const std::vector<prep::Segment>& segments);

// Normalized log-power image of every segment: rows are frequency bins,
// columns are frames.
Container to_spectrogram_container(const Container& segments, double sampling_hz,
                                   const spectro::StftConfig& cfg = {});

// Little-endian primitives, shared with the weights format.
void put_u32(std::ostream& out, std::uint32_t v);
void put_f64(std::ostream& out, double v);
std::uint32_t get_u32(std::istream& in);
double get_f64(std::istream& in);

}  // namespace afibkit::io
