#include "synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>

namespace afibkit::testing {
namespace {

struct Wave {
  double offset_s;
  double amp_mv;
  double width_s;
};

constexpr Wave kP{-0.17, 0.15, 0.025};
constexpr Wave kQ{-0.03, -0.12, 0.010};
constexpr Wave kR{0.0, 1.3, 0.011};
constexpr Wave kS{0.03, -0.30, 0.010};
constexpr Wave kT{0.26, 0.32, 0.045};

void add_wave(std::vector<double>& x, double hz, double centre_s, const Wave& w) {
  const double c = (centre_s + w.offset_s) * hz;
  const double sd = w.width_s * hz;
  const auto lo = static_cast<std::ptrdiff_t>(std::floor(c - 5 * sd));
  const auto hi = static_cast<std::ptrdiff_t>(std::ceil(c + 5 * sd));
  for (std::ptrdiff_t i = std::max<std::ptrdiff_t>(lo, 0); i <= hi && i < static_cast<std::ptrdiff_t>(x.size()); ++i) {
    const double d = (static_cast<double>(i) - c) / sd;
    x[static_cast<std::size_t>(i)] += w.amp_mv * std::exp(-0.5 * d * d);
  }
}

void put_word(std::vector<std::uint8_t>& out, unsigned code, unsigned value) {
  const unsigned w = (code << 10) | (value & 0x3FF);
  out.push_back(static_cast<std::uint8_t>(w & 0xFF));
  out.push_back(static_cast<std::uint8_t>(w >> 8));
}

}  // namespace

std::vector<double> regular_rr(std::size_t n, double mean, double jitter, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(-jitter, jitter);
  std::vector<double> rr(n);
  for (auto& v : rr) v = mean + d(rng);
  return rr;
}

std::vector<double> uniform_rr(std::size_t n, double lo, double hi, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(lo, hi);
  std::vector<double> rr(n);
  for (auto& v : rr) v = d(rng);
  return rr;
}

SynthEcg synth_ecg(const SynthParams& p) {
  std::mt19937_64 rng(p.seed);
  const auto n = static_cast<std::size_t>(std::llround(p.seconds * p.hz));
  SynthEcg e;
  e.mv.assign(n, 0.0);

  std::uniform_real_distribution<double> jit(-p.jitter, p.jitter);
  std::uniform_real_distribution<double> af(p.af_rr_lo, p.af_rr_hi);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double t = 0.3 + 0.3 * unit(rng);
  while (t < p.seconds - 0.05) {
    const double rr = p.afib ? af(rng) : p.mean_rr + jit(rng);
    if (!p.afib) add_wave(e.mv, p.hz, t, kP);
    add_wave(e.mv, p.hz, t, kQ);
    add_wave(e.mv, p.hz, t, kR);
    add_wave(e.mv, p.hz, t, kS);
    // T wave trails the R wave by a rate-dependent amount.
    add_wave(e.mv, p.hz, t, {kT.offset_s * std::sqrt(std::min(rr, 1.2) / 0.8), kT.amp_mv, kT.width_s});
    e.r_peaks.push_back(static_cast<std::size_t>(std::llround(t * p.hz)));
    t += rr;
  }
  if (p.afib) {
    // Fibrillatory baseline: two incommensurate tones with random phases.
    const double f1 = 4.0 + 5.0 * unit(rng);
    const double f2 = 4.0 + 5.0 * unit(rng);
    const double ph1 = 2 * std::numbers::pi * unit(rng);
    const double ph2 = 2 * std::numbers::pi * unit(rng);
    for (std::size_t i = 0; i < n; ++i) {
      const double s = static_cast<double>(i) / p.hz;
      e.mv[i] += 0.05 * std::sin(2 * std::numbers::pi * f1 * s + ph1) +
                 0.03 * std::sin(2 * std::numbers::pi * f2 * s + ph2);
    }
  }
  if (p.noise_mv > 0.0) {
    std::normal_distribution<double> g(0.0, p.noise_mv);
    for (double& v : e.mv) v += g(rng);
  }
  return e;
}

std::vector<std::uint8_t> encode_annotations(const std::vector<wfdb::Annotation>& anns) {
  std::vector<std::uint8_t> out;
  std::size_t t = 0;
  for (const auto& a : anns) {
    std::size_t delta = a.sample_index - t;
    if (delta > 1023) {
      put_word(out, wfdb::kCodeSkip, 0);
      const auto skip = static_cast<std::uint32_t>(delta);
      // PDP-11 long: high 16-bit half first, each half little-endian.
      out.push_back(static_cast<std::uint8_t>((skip >> 16) & 0xFF));
      out.push_back(static_cast<std::uint8_t>((skip >> 24) & 0xFF));
      out.push_back(static_cast<std::uint8_t>(skip & 0xFF));
      out.push_back(static_cast<std::uint8_t>((skip >> 8) & 0xFF));
      delta = 0;
    }
    put_word(out, static_cast<unsigned>(a.code), static_cast<unsigned>(delta));
    t = a.sample_index;
    if (a.aux) {
      put_word(out, wfdb::kCodeAux, static_cast<unsigned>(a.aux->size()));
      out.insert(out.end(), a.aux->begin(), a.aux->end());
      if (a.aux->size() % 2) out.push_back(0);
    }
  }
  put_word(out, 0, 0);
  return out;
}

std::filesystem::path write_synthetic_record(const std::filesystem::path& dir, const std::string& name,
                                             const std::vector<Episode>& episodes, double hz,
                                             std::uint64_t seed, double noise_mv) {
  std::vector<double> lead;
  std::vector<wfdb::Annotation> anns;
  for (std::size_t k = 0; k < episodes.size(); ++k) {
    SynthParams p;
    p.hz = hz;
    p.seconds = episodes[k].seconds;
    p.afib = episodes[k].afib;
    p.mean_rr = 0.7 + 0.03 * static_cast<double>(k % 5);
    p.noise_mv = noise_mv;
    p.seed = seed * 1000 + k;
    const auto e = synth_ecg(p);
    const std::size_t base = lead.size();
    anns.push_back({base, wfdb::kCodeRhythm, std::string(p.afib ? "(AFIB" : "(N")});
    for (auto r : e.r_peaks) anns.push_back({base + r, 1, std::nullopt});
    lead.insert(lead.end(), e.mv.begin(), e.mv.end());
  }

  std::vector<std::vector<int>> adu(2, std::vector<int>(lead.size()));
  for (std::size_t i = 0; i < lead.size(); ++i) {
    adu[0][i] = std::clamp(static_cast<int>(std::lround(lead[i] * 200.0)), -2048, 2047);
    adu[1][i] = std::clamp(static_cast<int>(std::lround(-0.5 * lead[i] * 200.0)), -2048, 2047);
  }
  std::filesystem::create_directories(dir);
  const auto bytes = wfdb::encode_format212(adu);
  std::ofstream(dir / (name + ".dat"), std::ios::binary)
      .write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));

  std::ofstream hea(dir / (name + ".hea"));
  hea << name << " 2 " << hz << ' ' << lead.size() << '\n';
  for (int ch = 0; ch < 2; ++ch) {
    std::int16_t sum = 0;
    for (int v : adu[ch]) sum = static_cast<std::int16_t>(sum + v);
    hea << name << ".dat 212 200 12 0 " << (adu[ch].empty() ? 0 : adu[ch][0]) << ' ' << sum << " 0 ECG"
        << ch << '\n';
  }
  hea.close();

  const auto atr = encode_annotations(anns);
  std::ofstream(dir / (name + ".atr"), std::ios::binary)
      .write(reinterpret_cast<const char*>(atr.data()), static_cast<std::streamsize>(atr.size()));
  return dir / name;
}

TempDir::TempDir(const std::string& tag) {
  static std::mt19937_64 rng(std::random_device{}());
  path_ = std::filesystem::temp_directory_path() /
          ("afibkit_" + tag + "_" + std::to_string(rng() % 1000000000ull));
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

std::filesystem::path mitdb_dir() { return AFIBKIT_MITDB_DIR; }

}  // namespace afibkit::testing

namespace afibkit::testing {

bool is_beat_code(int code) noexcept {
  return (code >= 1 && code <= 13) || code == 25 || code == 30 || code == 34 || code == 35 || code == 38 ||
         code == 41;
}

MatchStats match_peaks(const std::vector<std::size_t>& reference, const std::vector<std::size_t>& detected,
                       std::size_t tolerance) {
  MatchStats m;
  std::vector<bool> used(detected.size(), false);
  std::size_t j0 = 0;
  for (std::size_t r : reference) {
    while (j0 < detected.size() && detected[j0] + tolerance < r) ++j0;
    std::size_t best = detected.size();
    std::size_t best_dist = tolerance + 1;
    for (std::size_t j = j0; j < detected.size() && detected[j] <= r + tolerance; ++j) {
      const std::size_t d = detected[j] > r ? detected[j] - r : r - detected[j];
      if (!used[j] && d < best_dist) {
        best = j;
        best_dist = d;
      }
    }
    if (best < detected.size()) {
      used[best] = true;
      ++m.true_pos;
    } else {
      ++m.false_neg;
    }
  }
  m.false_pos = detected.size() - m.true_pos;
  return m;
}

}  // namespace afibkit::testing
