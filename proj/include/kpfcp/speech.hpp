#ifndef KPFCP_SPEECH_HPP
#define KPFCP_SPEECH_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "kpfcp/stft.hpp"

namespace kpfcp::speech {

namespace detail {

// Two-pole resonator at centre frequency fc with bandwidth bw (Hz).
class Resonator {
 public:
  Resonator(double fc, double bw, double fs) {
    const double r = std::exp(-std::numbers::pi * bw / fs);
    a1_ = 2.0 * r * std::cos(2.0 * std::numbers::pi * fc / fs);
    a2_ = -r * r;
    gain_ = 1.0 - r;
  }
  double operator()(double x) {
    const double y = gain_ * x + a1_ * y1_ + a2_ * y2_;
    y2_ = y1_;
    y1_ = y;
    return y;
  }

 private:
  double a1_, a2_, gain_;
  double y1_ = 0.0, y2_ = 0.0;
};

}  // namespace detail

/// Speech-shaped test signal: voiced syllables (jittered glottal pulse trains
/// through three formant resonators), unvoiced fricative bursts and pauses,
/// each with a raised-cosine envelope. Peak-normalized to 0.5.
inline SampleBuffer SyntheticUtterance(double duration_s, std::uint64_t seed, int fs = 16000) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto draw = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

  const auto total = static_cast<std::size_t>(duration_s * fs);
  std::vector<double> out(total, 0.0);
  const double speaker_f0 = draw(95.0, 210.0);

  std::size_t pos = 0;
  while (pos < total) {
    const double kind = unit(rng);
    const auto seg_len = static_cast<std::size_t>(
        fs * (kind < 0.65 ? draw(0.12, 0.32) : kind < 0.85 ? draw(0.05, 0.14) : draw(0.06, 0.3)));
    const std::size_t end = std::min(total, pos + seg_len);
    const double level = draw(0.3, 1.0);

    if (kind < 0.65) {
      std::array<detail::Resonator, 3> formants{
          detail::Resonator(draw(300, 850), draw(60, 110), fs),
          detail::Resonator(draw(900, 2300), draw(80, 150), fs),
          detail::Resonator(draw(2300, 3400), draw(120, 220), fs)};
      double f0 = speaker_f0 * draw(0.85, 1.2);
      const double glide = draw(-0.3, 0.3);
      double phase = 0.0;
      double glottal = 0.0;
      for (std::size_t i = pos; i < end; ++i) {
        const double progress = static_cast<double>(i - pos) / static_cast<double>(end - pos);
        const double f = f0 * (1.0 + glide * progress) * (1.0 + 0.01 * gauss(rng));
        phase += f / fs;
        double pulse = 0.0;
        if (phase >= 1.0) {
          phase -= 1.0;
          pulse = 1.0;
        }
        glottal = 0.97 * glottal + pulse + 0.02 * gauss(rng);
        const double v = formants[0](glottal) + 0.6 * formants[1](glottal) +
                         0.3 * formants[2](glottal);
        const double env = std::sin(std::numbers::pi * progress);
        out[i] = level * env * v;
      }
    } else if (kind < 0.85) {
      detail::Resonator hiss(draw(3500, 6000), draw(1500, 3000), fs);
      for (std::size_t i = pos; i < end; ++i) {
        const double progress = static_cast<double>(i - pos) / static_cast<double>(end - pos);
        out[i] = 0.15 * level * std::sin(std::numbers::pi * progress) * hiss(gauss(rng));
      }
    }
    pos = end;
  }

  double peak = 0.0;
  for (double v : out) peak = std::max(peak, std::abs(v));
  if (peak > 0.0)
    for (double& v : out) v *= 0.5 / peak;
  return SampleBuffer{std::move(out), fs};
}

}  // namespace kpfcp::speech

#endif  // KPFCP_SPEECH_HPP
