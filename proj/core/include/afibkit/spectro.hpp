#pragma once

// Radix-2 FFT and the normalized power spectrograms fed to the 2D network.

#include <complex>
#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

namespace afibkit::spectro {

using Complex = std::complex<double>;

bool is_power_of_two(std::size_t n) noexcept;

// In-place iterative decimation-in-time transform, X[k] = sum x[t] e^{-2 pi i k t / n}.
void fft_inplace(std::span<Complex> x);
std::vector<Complex> fft(std::span<const Complex> x);
// Inverse via the conjugation identity: ifft(X) = conj(fft(conj(X))) / n.
std::vector<Complex> inverse_fft(std::span<const Complex> spectrum);

struct StftConfig {
  std::size_t window = 128;
  std::size_t hop = 64;
};

// values[f * time_frames + t]: one column per frame.
struct Spectrogram {
  std::size_t freq_bins = 0;
  std::size_t time_frames = 0;
  std::vector<double> values;
  double bin_hz = 0.0;
  double frame_stride_s = 0.0;

  double at(std::size_t f, std::size_t t) const { return values[f * time_frames + t]; }
};

std::vector<double> hann_window(std::size_t n);
std::size_t frame_count(std::size_t length, const StftConfig& cfg);

Spectrogram stft_power(std::span<const double> segment, double sampling_hz, const StftConfig& cfg = {});

// log(1 + v), then min-max to [0, 1]; constant input maps to all zeros.
Spectrogram log_normalize(Spectrogram power);

Spectrogram spectrogram_image(std::span<const double> segment, double sampling_hz,
                              const StftConfig& cfg = {});

// 8-bit binary PGM, low frequencies at the bottom.
void write_pgm(std::ostream& out, const Spectrogram& s);

}  // namespace afibkit::spectro
