#include "afibkit/containers.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "afibkit/error.hpp"
#include "afibkit/parallel.hpp"

namespace afibkit::io {
namespace {

void require(std::istream& in, const char* what) {
  if (!in) throw Error(ErrorCode::kMalformedContainer, std::string("truncated ") + what);
}

}  // namespace

void put_u32(std::ostream& out, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v & 0xFF), static_cast<char>((v >> 8) & 0xFF),
                     static_cast<char>((v >> 16) & 0xFF), static_cast<char>((v >> 24) & 0xFF)};
  out.write(b, 4);
}

void put_f64(std::ostream& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((bits >> (8 * i)) & 0xFF);
  out.write(b, 8);
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  require(in, "u32");
  return b[0] | (b[1] << 8) | (b[2] << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

double get_f64(std::istream& in) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  require(in, "f64");
  std::uint64_t bits = 0;
  for (int i = 7; i >= 0; --i) bits = (bits << 8) | b[i];
  return std::bit_cast<double>(bits);
}

void write_container(std::ostream& out, const Container& c) {
  if (c.rank != 1 && c.rank != 2) throw Error(ErrorCode::kMalformedContainer, "rank must be 1 or 2");
  out.write(kContainerMagic, sizeof kContainerMagic);
  put_u32(out, kContainerVersion);
  put_u32(out, c.rank);
  for (const auto& item : c.items) {
    if (item.rows * item.cols != item.values.size()) {
      throw Error(ErrorCode::kShapeMismatch, "item shape does not match value count");
    }
    out.put(static_cast<char>(item.label));
    put_u32(out, static_cast<std::uint32_t>(item.values.size()));
    if (c.rank == 2) {
      put_u32(out, static_cast<std::uint32_t>(item.rows));
      put_u32(out, static_cast<std::uint32_t>(item.cols));
    }
    for (double v : item.values) put_f64(out, v);
  }
  if (!out) throw Error(ErrorCode::kIoError, "write failed");
}

Container read_container(std::istream& in) {
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kContainerMagic, 8) != 0) {
    throw Error(ErrorCode::kMalformedContainer, "bad magic");
  }
  const std::uint32_t version = get_u32(in);
  if (version != kContainerVersion) {
    throw Error(ErrorCode::kMalformedContainer, "unsupported version " + std::to_string(version));
  }
  Container c;
  c.rank = get_u32(in);
  if (c.rank != 1 && c.rank != 2) throw Error(ErrorCode::kMalformedContainer, "bad rank");

  while (in.peek() != std::char_traits<char>::eof()) {
    LabeledArray item;
    const int label = in.get();
    if (label != 0 && label != 1) throw Error(ErrorCode::kMalformedContainer, "label must be 0 or 1");
    item.label = label;
    const std::uint32_t n = get_u32(in);
    if (c.rank == 2) {
      item.rows = get_u32(in);
      item.cols = get_u32(in);
      if (item.rows * item.cols != n) throw Error(ErrorCode::kMalformedContainer, "shape/length mismatch");
    } else {
      item.cols = n;
    }
    item.values.resize(n);
    for (auto& v : item.values) v = get_f64(in);
    c.items.push_back(std::move(item));
  }
  return c;
}

void write_container(const std::filesystem::path& path, const Container& c) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  write_container(out, c);
}

Container read_container(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  return read_container(in);
}

Container to_container(const std::vector<prep::Segment>& segments) {
  Container c;
  c.rank = 1;
  c.items.reserve(segments.size());
  for (const auto& s : segments) c.items.push_back({s.label, 1, s.samples.size(), s.samples});
  return c;
}

Container to_spectrogram_container(const Container& segments, double sampling_hz,
                                   const spectro::StftConfig& cfg) {
  if (segments.rank != 1) throw Error(ErrorCode::kShapeMismatch, "spectrograms need a rank-1 container");
  Container out;
  out.rank = 2;
  out.items.resize(segments.items.size());
  parallel_for(0, segments.items.size(), [&](std::size_t i) {
    const auto& seg = segments.items[i];
    auto img = spectro::spectrogram_image(seg.values, sampling_hz, cfg);
    out.items[i] = {seg.label, img.freq_bins, img.time_frames, std::move(img.values)};
  });
  return out;
}

}  // namespace afibkit::io
