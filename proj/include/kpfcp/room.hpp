#ifndef KPFCP_ROOM_HPP
#define KPFCP_ROOM_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "kpfcp/common.hpp"
#include "kpfcp/stft.hpp"

namespace kpfcp::room {

using Vec3 = std::array<double, 3>;

inline double Distance(const Vec3& a, const Vec3& b) {
  const double dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

struct RoomScene {
  Vec3 room_dims{7.0, 7.0, 3.0};
  Vec3 source_pos{3.5, 2.5, 1.5};
  Vec3 mic_pos{3.5, 3.5, 1.5};
  double t60 = 0.4;
  int sample_rate = 16000;
  double sound_speed = 343.0;
};

inline void Validate(const RoomScene& s) {
  Require(s.sample_rate > 0, "scene.sample_rate must be positive");
  Require(s.sound_speed > 0, "scene.sound_speed must be positive");
  Require(std::isfinite(s.t60) && s.t60 > 0, "scene.t60 must be positive");
  for (int i = 0; i < 3; ++i) {
    Require(s.room_dims[i] > 0, "scene.room_dims must be positive");
    Require(s.source_pos[i] > 0 && s.source_pos[i] < s.room_dims[i],
            "scene.source_pos must lie strictly inside the room");
    Require(s.mic_pos[i] > 0 && s.mic_pos[i] < s.room_dims[i],
            "scene.mic_pos must lie strictly inside the room");
  }
  Require(Distance(s.source_pos, s.mic_pos) > 0, "source and microphone positions coincide");
}

inline double Volume(const RoomScene& s) {
  return s.room_dims[0] * s.room_dims[1] * s.room_dims[2];
}

inline double SurfaceArea(const RoomScene& s) {
  const auto& d = s.room_dims;
  return 2.0 * (d[0] * d[1] + d[1] * d[2] + d[0] * d[2]);
}

/// Uniform absorption coefficient implied by Sabine's formula.
inline double SabineAbsorption(const RoomScene& s) {
  return 24.0 * std::log(10.0) * Volume(s) / (s.sound_speed * SurfaceArea(s) * s.t60);
}

/// Wall reflection coefficient. Absorption is obtained by inverting Eyring's
/// formula, whose exponential decay law is the one the image method follows.
/// Geometries for which the Sabine absorption exceeds 1 are rejected.
inline double ReflectionCoefficient(const RoomScene& s) {
  const double sabine = SabineAbsorption(s);
  if (sabine > 1.0) {
    throw ConfigError("t60 of " + std::to_string(s.t60) +
                      " s is unachievable for this room (Sabine absorption " +
                      std::to_string(sabine) + " > 1)");
  }
  const double eyring = 1.0 - std::exp(-sabine);
  return std::sqrt(1.0 - eyring);
}

/// Room impulse response with its direct-path boundary.
struct Rir {
  std::vector<double> taps;
  std::size_t direct_tap = 0;
  std::size_t direct_cutoff = 1;  // first tap that belongs to the reflections
  int sample_rate = 16000;
};

inline constexpr double kDirectCutoffMs = 2.0;

struct ImageMethodOptions {
  std::size_t length = 0;                  // 0: ceil(t60 * fs)
  int max_order = -1;                      // -1: every image arriving within length
  std::optional<double> reflection;        // overrides the T60-derived coefficient
  double direct_cutoff_ms = kDirectCutoffMs;
};

inline std::size_t CutoffTap(std::size_t direct_tap, double cutoff_ms, int sample_rate) {
  const auto extra = static_cast<std::size_t>(std::lround(cutoff_ms * sample_rate / 1000.0));
  return direct_tap + std::max<std::size_t>(1, extra);
}

inline double SchroederT60(const std::vector<double>& taps, int sample_rate);

namespace detail {

inline Rir RenderImages(const RoomScene& scene, double beta, std::size_t length,
                        const ImageMethodOptions& opt) {
  const double fs = scene.sample_rate;
  const double c = scene.sound_speed;

  Rir rir;
  rir.sample_rate = scene.sample_rate;
  rir.taps.assign(length, 0.0);
  const double dist = Distance(scene.source_pos, scene.mic_pos);
  rir.direct_tap = static_cast<std::size_t>(std::lround(fs * dist / c));
  rir.direct_cutoff = CutoffTap(rir.direct_tap, opt.direct_cutoff_ms, scene.sample_rate);
  Require(rir.direct_cutoff < length, "rir is too short to contain the direct path");

  const double max_dist = static_cast<double>(length) * c / fs;
  std::array<int, 3> bound{};
  for (int i = 0; i < 3; ++i)
    bound[i] = static_cast<int>(std::ceil(max_dist / (2.0 * scene.room_dims[i]))) + 1;

  const auto& L = scene.room_dims;
  const auto& src = scene.source_pos;
  const auto& mic = scene.mic_pos;
  // Reflection counts per axis for image index n and parity q.
  auto order = [](int n, int q) { return std::abs(n - q) + std::abs(n); };

  for (int nx = -bound[0]; nx <= bound[0]; ++nx) {
    for (int qx = 0; qx <= 1; ++qx) {
      const double dx = (1 - 2 * qx) * src[0] + 2 * nx * L[0] - mic[0];
      const int ox = order(nx, qx);
      for (int ny = -bound[1]; ny <= bound[1]; ++ny) {
        for (int qy = 0; qy <= 1; ++qy) {
          const double dy = (1 - 2 * qy) * src[1] + 2 * ny * L[1] - mic[1];
          const int oy = order(ny, qy);
          const double dxy2 = dx * dx + dy * dy;
          if (dxy2 > max_dist * max_dist) continue;
          for (int nz = -bound[2]; nz <= bound[2]; ++nz) {
            for (int qz = 0; qz <= 1; ++qz) {
              const double dz = (1 - 2 * qz) * src[2] + 2 * nz * L[2] - mic[2];
              const int total = ox + oy + order(nz, qz);
              if (opt.max_order >= 0 && total > opt.max_order) continue;
              const double d = std::sqrt(dxy2 + dz * dz);
              const auto tap = static_cast<std::size_t>(std::lround(fs * d / c));
              if (tap >= length) continue;
              const double gain = total == 0 ? 1.0 : std::pow(beta, total);
              if (gain == 0.0) continue;
              rir.taps[tap] += gain / (4.0 * std::numbers::pi * d);
            }
          }
        }
      }
    }
  }
  return rir;
}

}  // namespace detail

inline constexpr int kCalibrationIterations = 8;
inline constexpr double kCalibrationTolerance = 0.02;

/// Allen-Berkley image method for a shoebox room with uniform walls.
/// Image delays are rounded to the nearest sample.
///
/// A shoebox image response decays more slowly than the diffuse-field
/// formulas predict, so the T60-derived reflection coefficient is refined:
/// starting from ReflectionCoefficient, log(beta) is rescaled by the ratio of
/// measured to target Schroeder T60 until they agree within 2%.
inline Rir ImageMethod(const RoomScene& scene, const ImageMethodOptions& opt = {}) {
  Validate(scene);
  const std::size_t length = opt.length > 0
                                 ? opt.length
                                 : static_cast<std::size_t>(std::ceil(scene.t60 * scene.sample_rate));
  if (opt.reflection) {
    Require(*opt.reflection >= 0.0 && *opt.reflection <= 1.0,
            "reflection coefficient must lie in [0, 1]");
    return detail::RenderImages(scene, *opt.reflection, length, opt);
  }
  double beta = ReflectionCoefficient(scene);
  Rir rir = detail::RenderImages(scene, beta, length, opt);
  for (int it = 0; it < kCalibrationIterations && beta > 0.0 && beta < 1.0; ++it) {
    double measured = 0.0;
    try {
      measured = SchroederT60(rir.taps, rir.sample_rate);
    } catch (const ConfigError&) {
      break;  // decay too short to measure; keep the formula value
    }
    const double ratio = measured / scene.t60;
    if (!std::isfinite(ratio) || ratio <= 0.0 || std::abs(ratio - 1.0) <= kCalibrationTolerance) break;
    beta = std::exp(std::log(beta) * ratio);
    rir = detail::RenderImages(scene, beta, length, opt);
  }
  return rir;
}

struct RirParts {
  Rir direct;
  Rir reverb;
};

/// Splits the RIR at direct_tap + cutoff_ms. The two parts have disjoint
/// supports and sum to the input tap-wise.
inline RirParts SplitDirect(const Rir& rir, double cutoff_ms = kDirectCutoffMs) {
  Require(cutoff_ms >= 0.0 && std::isfinite(cutoff_ms), "direct cutoff must be non-negative");
  const std::size_t cut = CutoffTap(rir.direct_tap, cutoff_ms, rir.sample_rate);
  Require(cut < rir.taps.size(), "direct cutoff lies beyond the rir length");

  RirParts parts{rir, rir};
  parts.direct.direct_cutoff = parts.reverb.direct_cutoff = cut;
  for (std::size_t i = 0; i < rir.taps.size(); ++i) {
    if (i < cut)
      parts.reverb.taps[i] = 0.0;
    else
      parts.direct.taps[i] = 0.0;
  }
  return parts;
}

/// Reverberation time from the Schroeder energy decay curve, fitted between
/// the -5 dB and -25 dB points and extrapolated to 60 dB.
inline double SchroederT60(const std::vector<double>& taps, int sample_rate) {
  const std::size_t n = taps.size();
  std::vector<double> edc(n);
  double acc = 0.0;
  for (std::size_t i = n; i-- > 0;) {
    acc += taps[i] * taps[i];
    edc[i] = acc;
  }
  Require(acc > 0.0, "rir has no energy");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double db = 10.0 * std::log10(edc[i] / acc);
    if (db > -5.0) continue;
    if (db < -25.0) break;
    const double t = static_cast<double>(i) / sample_rate;
    sx += t;
    sy += db;
    sxx += t * t;
    sxy += t * db;
    ++count;
  }
  Require(count >= 2, "rir decay too short for a T60 estimate");
  const double cnt = static_cast<double>(count);
  const double slope = (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
  return -60.0 / slope;
}

/// Full linear convolution via FFT.
inline std::vector<double> Convolve(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.empty() || b.empty()) return {};
  const std::size_t out_len = a.size() + b.size() - 1;
  std::size_t nfft = 2;
  while (nfft < out_len) nfft <<= 1;

  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  std::vector<double> pa(nfft, 0.0), pb(nfft, 0.0);
  std::copy(a.begin(), a.end(), pa.begin());
  std::copy(b.begin(), b.end(), pb.begin());
  std::vector<cplx> fa(nfft / 2 + 1), fb(nfft / 2 + 1);
  fft.fwd(fa.data(), pa.data(), static_cast<Eigen::Index>(nfft));
  fft.fwd(fb.data(), pb.data(), static_cast<Eigen::Index>(nfft));
  for (std::size_t i = 0; i < fa.size(); ++i) fa[i] *= fb[i];
  fft.inv(pa.data(), fa.data(), static_cast<Eigen::Index>(nfft));
  pa.resize(out_len);
  return pa;
}

struct RenderedScene {
  SampleBuffer observed;
  SampleBuffer direct_truth;
  SampleBuffer reverb_truth;
  SampleBuffer noise;
};

inline constexpr double kNoNoise = std::numeric_limits<double>::infinity();

/// observed = clean * rir + noise, truncated to the clean length. The white
/// Gaussian noise is scaled against the reverberant (clean * rir) energy.
inline RenderedScene RenderScene(const SampleBuffer& clean, const Rir& rir, double snr_db,
                                 std::uint64_t seed, double cutoff_ms = kDirectCutoffMs) {
  Validate(clean);
  Require(!std::isnan(snr_db) && snr_db != -std::numeric_limits<double>::infinity(),
          "snr_db must be finite or +inf");
  Require(Energy(clean.samples) > 0.0, "clean signal is silent; SNR is undefined");

  const auto parts = SplitDirect(rir, cutoff_ms);
  const std::size_t n = clean.size();
  auto trimmed = [&](const std::vector<double>& taps) {
    auto y = Convolve(clean.samples, taps);
    y.resize(n);
    return SampleBuffer{std::move(y), clean.sample_rate};
  };

  RenderedScene out;
  out.direct_truth = trimmed(parts.direct.taps);
  out.reverb_truth = trimmed(parts.reverb.taps);
  const SampleBuffer reverberant = trimmed(rir.taps);
  out.noise = SampleBuffer{std::vector<double>(n, 0.0), clean.sample_rate};

  if (std::isfinite(snr_db)) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (auto& v : out.noise.samples) v = gauss(rng);
    const double target = Energy(reverberant.samples) / std::pow(10.0, snr_db / 10.0);
    const double scale = std::sqrt(target / Energy(out.noise.samples));
    for (auto& v : out.noise.samples) v *= scale;
  }

  out.observed = reverberant;
  for (std::size_t i = 0; i < n; ++i) out.observed.samples[i] += out.noise.samples[i];
  return out;
}

/// Ranges for randomly drawn training-style scenes.
struct SceneRanges {
  Vec3 dims_min{5.0, 5.0, 3.0};
  Vec3 dims_max{10.0, 10.0, 4.0};
  double mic_height_min = 1.0, mic_height_max = 2.0;
  double distance_min = 0.5, distance_max = 2.0;
  double t60_min = 0.3, t60_max = 0.8;
};

/// Draws a scene: microphone at the room centre (random height), source at a
/// random direction and distance. A fixed t60 may be supplied.
inline RoomScene SampleScene(std::mt19937_64& rng, std::optional<double> t60 = std::nullopt,
                             const SceneRanges& r = {}) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto draw = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

  RoomScene s;
  for (int i = 0; i < 3; ++i) s.room_dims[i] = draw(r.dims_min[i], r.dims_max[i]);
  s.mic_pos = {s.room_dims[0] / 2, s.room_dims[1] / 2, draw(r.mic_height_min, r.mic_height_max)};
  s.t60 = t60 ? *t60 : draw(r.t60_min, r.t60_max);
  constexpr double kMargin = 0.1;
  for (;;) {
    const double dist = draw(r.distance_min, r.distance_max);
    const double azimuth = draw(0.0, 2.0 * std::numbers::pi);
    const double elevation = std::asin(draw(-1.0, 1.0));
    const Vec3 p{s.mic_pos[0] + dist * std::cos(elevation) * std::cos(azimuth),
                 s.mic_pos[1] + dist * std::cos(elevation) * std::sin(azimuth),
                 s.mic_pos[2] + dist * std::sin(elevation)};
    bool inside = true;
    for (int i = 0; i < 3; ++i) inside = inside && p[i] > kMargin && p[i] < s.room_dims[i] - kMargin;
    if (inside) {
      s.source_pos = p;
      return s;
    }
  }
}

}  // namespace kpfcp::room

#endif  // KPFCP_ROOM_HPP
