#include "afibkit/spectro.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>

#include "afibkit/error.hpp"
#include "afibkit/parallel.hpp"

namespace afibkit::spectro {

bool is_power_of_two(std::size_t n) noexcept { return n != 0 && (n & (n - 1)) == 0; }

void fft_inplace(std::span<Complex> x) {
  const std::size_t n = x.size();
  if (!is_power_of_two(n)) throw Error(ErrorCode::kNonPowerOfTwo, "length " + std::to_string(n));

  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j |= bit;
    if (i < j) std::swap(x[i], x[j]);
  }

  std::vector<Complex> twiddle(n / 2);
  for (std::size_t k = 0; k < n / 2; ++k) {
    twiddle[k] = std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n));
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const std::size_t half = len / 2;
    const std::size_t step = n / len;
    for (std::size_t start = 0; start < n; start += len) {
      for (std::size_t k = 0; k < half; ++k) {
        const Complex t = twiddle[k * step] * x[start + k + half];
        x[start + k + half] = x[start + k] - t;
        x[start + k] += t;
      }
    }
  }
}

std::vector<Complex> fft(std::span<const Complex> x) {
  std::vector<Complex> out(x.begin(), x.end());
  fft_inplace(out);
  return out;
}

std::vector<Complex> inverse_fft(std::span<const Complex> spectrum) {
  std::vector<Complex> out(spectrum.size());
  std::transform(spectrum.begin(), spectrum.end(), out.begin(), [](Complex c) { return std::conj(c); });
  fft_inplace(out);
  const double scale = 1.0 / static_cast<double>(out.size());
  for (auto& c : out) c = std::conj(c) * scale;
  return out;
}

std::vector<double> hann_window(std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n));
  }
  return w;
}

std::size_t frame_count(std::size_t length, const StftConfig& cfg) {
  if (cfg.hop == 0) throw Error(ErrorCode::kInvalidConfig, "hop must be positive");
  if (length < cfg.window) {
    throw Error(ErrorCode::kSegmentTooShort, "segment of " + std::to_string(length) +
                                                 " samples is shorter than the window " +
                                                 std::to_string(cfg.window));
  }
  return 1 + (length - cfg.window) / cfg.hop;
}

Spectrogram stft_power(std::span<const double> segment, double sampling_hz, const StftConfig& cfg) {
  if (!is_power_of_two(cfg.window)) {
    throw Error(ErrorCode::kNonPowerOfTwo, "window " + std::to_string(cfg.window));
  }
  Spectrogram s;
  s.time_frames = frame_count(segment.size(), cfg);
  s.freq_bins = cfg.window / 2;
  s.bin_hz = sampling_hz / static_cast<double>(cfg.window);
  s.frame_stride_s = static_cast<double>(cfg.hop) / sampling_hz;
  s.values.assign(s.freq_bins * s.time_frames, 0.0);

  const auto window = hann_window(cfg.window);
  parallel_for(0, s.time_frames, [&](std::size_t t) {
    std::vector<Complex> frame(cfg.window);
    for (std::size_t i = 0; i < cfg.window; ++i) frame[i] = segment[t * cfg.hop + i] * window[i];
    fft_inplace(frame);
    for (std::size_t k = 0; k < s.freq_bins; ++k) s.values[k * s.time_frames + t] = std::norm(frame[k]);
  });
  return s;
}

Spectrogram log_normalize(Spectrogram power) {
  for (double& v : power.values) {
    if (v < 0.0) throw Error(ErrorCode::kInvalidConfig, "negative power value");
    v = std::log1p(v);
  }
  if (power.values.empty()) return power;
  const auto [mn, mx] = std::minmax_element(power.values.begin(), power.values.end());
  const double lo = *mn;
  const double range = *mx - lo;
  for (double& v : power.values) v = range > 0.0 ? std::clamp((v - lo) / range, 0.0, 1.0) : 0.0;
  return power;
}

Spectrogram spectrogram_image(std::span<const double> segment, double sampling_hz, const StftConfig& cfg) {
  return log_normalize(stft_power(segment, sampling_hz, cfg));
}

void write_pgm(std::ostream& out, const Spectrogram& s) {
  out << "P5\n" << s.time_frames << ' ' << s.freq_bins << "\n255\n";
  for (std::size_t row = 0; row < s.freq_bins; ++row) {
    const std::size_t f = s.freq_bins - 1 - row;
    for (std::size_t t = 0; t < s.time_frames; ++t) {
      out.put(static_cast<char>(static_cast<unsigned char>(std::lround(std::clamp(s.at(f, t), 0.0, 1.0) * 255.0))));
    }
  }
}

}  // namespace afibkit::spectro
