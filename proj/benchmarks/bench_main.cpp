#include <benchmark/benchmark.h>

#include <cmath>
#include <random>

#include "afibkit/models.hpp"
#include "afibkit/rr_stats.hpp"
#include "afibkit/spectro.hpp"

using namespace afibkit;

namespace {

std::vector<double> noise(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d;
  std::vector<double> x(n);
  for (auto& v : x) v = d(rng);
  return x;
}

// Spiky pseudo-ECG: a narrow pulse every 0.8 s over noise.
std::vector<double> pulse_train(double hz, double seconds) {
  auto x = noise(static_cast<std::size_t>(hz * seconds), 1);
  for (auto& v : x) v *= 0.02;
  for (double t = 0.4; t < seconds; t += 0.8) {
    const auto centre = static_cast<std::ptrdiff_t>(t * hz);
    for (std::ptrdiff_t k = -10; k <= 10; ++k) {
      const auto i = static_cast<std::size_t>(centre + k);
      if (i < x.size()) x[i] += std::exp(-0.5 * (k / 3.0) * (k / 3.0));
    }
  }
  return x;
}

void BM_Fft(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto re = noise(n, 2);
  std::vector<spectro::Complex> x(re.begin(), re.end());
  for (auto _ : state) {
    auto y = x;
    spectro::fft_inplace(y);
    benchmark::DoNotOptimize(y.data());
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Fft)->RangeMultiplier(4)->Range(64, 4096)->Complexity(benchmark::oNLogN);

void BM_Spectrogram(benchmark::State& state) {
  const auto x = noise(1250, 3);
  for (auto _ : state) benchmark::DoNotOptimize(spectro::spectrogram_image(x, 125.0));
}
BENCHMARK(BM_Spectrogram);

void BM_DetectRPeaks(benchmark::State& state) {
  const auto x = pulse_train(360.0, 30.0);
  for (auto _ : state) benchmark::DoNotOptimize(rr::detect_r_peaks(x, 360.0));
}
BENCHMARK(BM_DetectRPeaks)->Unit(benchmark::kMillisecond);

void BM_Cnn1dForward(benchmark::State& state) {
  auto net = models::instantiate(models::build_cnn1d(1250), 1);
  const auto batch = static_cast<std::size_t>(state.range(0));
  nn::Tensor x({batch, 1, 1250}, noise(batch * 1250, 4));
  for (auto _ : state) benchmark::DoNotOptimize(net.forward(x, nn::Mode::kInfer));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * batch));
}
BENCHMARK(BM_Cnn1dForward)->Arg(1)->Arg(16)->Unit(benchmark::kMillisecond);

void BM_Cnn1dTrainStep(benchmark::State& state) {
  auto net = models::instantiate(models::build_cnn1d(1250), 1);
  nn::Adam opt;
  nn::Tensor x({16, 1, 1250}, noise(16 * 1250, 5));
  nn::Tensor y({16, 1});
  for (std::size_t i = 0; i < 16; ++i) y[i] = static_cast<double>(i % 2);
  for (auto _ : state) benchmark::DoNotOptimize(models::train_step(net, opt, x, y));
}
BENCHMARK(BM_Cnn1dTrainStep)->Unit(benchmark::kMillisecond);

void BM_Cnn2dTrainStep(benchmark::State& state) {
  auto net = models::instantiate(models::build_cnn2d(64, 18), 1);
  nn::Adam opt;
  nn::Tensor x({50, 1, 64, 18}, noise(50 * 64 * 18, 6));
  nn::Tensor y({50, 1});
  for (std::size_t i = 0; i < 50; ++i) y[i] = static_cast<double>(i % 2);
  for (auto _ : state) benchmark::DoNotOptimize(models::train_step(net, opt, x, y));
}
BENCHMARK(BM_Cnn2dTrainStep)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
