#ifndef KPFCP_STFT_HPP
#define KPFCP_STFT_HPP

#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "kpfcp/common.hpp"

namespace kpfcp {

/// Mono time-domain signal.
struct SampleBuffer {
  std::vector<double> samples;
  int sample_rate = 16000;

  std::size_t size() const noexcept { return samples.size(); }
  bool empty() const noexcept { return samples.empty(); }
};

inline void Validate(const SampleBuffer& x) {
  Require(x.sample_rate > 0, "sample_rate must be positive");
  for (double v : x.samples) Require(std::isfinite(v), "non-finite sample");
}

inline double Energy(const std::vector<double>& x) {
  double acc = 0.0;
  for (double v : x) acc += v * v;
  return acc;
}

enum class Window { kSqrtHann };

struct StftConfig {
  std::size_t frame_size = 512;
  std::size_t hop = 128;
  Window window = Window::kSqrtHann;

  std::size_t bins() const noexcept { return frame_size / 2 + 1; }
};

inline void Validate(const StftConfig& cfg) {
  Require(cfg.frame_size >= 4 && cfg.frame_size % 2 == 0,
          "stft.frame_size must be even and >= 4");
  Require(cfg.hop > 0 && cfg.frame_size % cfg.hop == 0,
          "stft.hop must divide stft.frame_size");
  Require(cfg.frame_size / cfg.hop == 4, "stft overlap must be 75% (frame_size = 4 * hop)");
}

/// Periodic square-root Hann. At 75% overlap the squared window sums to 2.
inline std::vector<double> AnalysisWindow(const StftConfig& cfg) {
  std::vector<double> w(cfg.frame_size);
  const double n = static_cast<double>(cfg.frame_size);
  for (std::size_t i = 0; i < cfg.frame_size; ++i) {
    const double hann = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / n);
    w[i] = std::sqrt(hann);
  }
  return w;
}

/// Complex time-frequency matrix, frames x bins.
struct TFGrid {
  CMatrix data;
  StftConfig config;
  std::size_t source_length = 0;  // samples of the analyzed signal, 0 if unknown

  Eigen::Index frames() const noexcept { return data.rows(); }
  Eigen::Index bins() const noexcept { return data.cols(); }
};

inline bool SameShape(const TFGrid& a, const TFGrid& b) {
  return a.frames() == b.frames() && a.bins() == b.bins() &&
         a.config.frame_size == b.config.frame_size && a.config.hop == b.config.hop;
}

inline std::size_t FrameCount(std::size_t length, const StftConfig& cfg) {
  if (length <= cfg.frame_size) return 1;
  return (length - cfg.frame_size + cfg.hop - 1) / cfg.hop + 1;
}

inline TFGrid Analyze(const SampleBuffer& x, const StftConfig& cfg = {}) {
  Require(!x.empty(), "cannot analyze an empty signal");
  Validate(cfg);
  Validate(x);

  const std::size_t n = cfg.frame_size;
  const std::size_t frames = FrameCount(x.size(), cfg);
  const auto window = AnalysisWindow(cfg);

  TFGrid grid;
  grid.config = cfg;
  grid.source_length = x.size();
  grid.data.resize(static_cast<Eigen::Index>(frames), static_cast<Eigen::Index>(cfg.bins()));

  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  std::vector<double> frame(n);
  std::vector<cplx> spectrum(n);
  for (std::size_t t = 0; t < frames; ++t) {
    const std::size_t start = t * cfg.hop;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t idx = start + i;
      frame[i] = idx < x.size() ? x.samples[idx] * window[i] : 0.0;
    }
    fft.fwd(spectrum.data(), frame.data(), static_cast<Eigen::Index>(n));
    for (std::size_t f = 0; f < cfg.bins(); ++f) {
      grid.data(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(f)) = spectrum[f];
    }
  }
  return grid;
}

/// Weighted overlap-add inverse of Analyze. Output length is source_length
/// when known, otherwise the full overlap-add span.
inline SampleBuffer Synthesize(const TFGrid& grid, int sample_rate = 16000) {
  Validate(grid.config);
  Require(grid.bins() == static_cast<Eigen::Index>(grid.config.bins()),
          "grid bin count does not match its stft config");
  for (Eigen::Index j = 0; j < grid.data.cols(); ++j)
    for (Eigen::Index i = 0; i < grid.data.rows(); ++i)
      Require(IsFinite(grid.data(i, j)), "non-finite TF entry");

  const std::size_t n = grid.config.frame_size;
  const std::size_t hop = grid.config.hop;
  const auto frames = static_cast<std::size_t>(grid.frames());
  const std::size_t span = frames == 0 ? 0 : (frames - 1) * hop + n;
  const auto window = AnalysisWindow(grid.config);

  std::vector<double> acc(span, 0.0);
  std::vector<double> norm(span, 0.0);
  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  std::vector<cplx> spectrum(grid.config.bins());
  std::vector<double> frame(n);
  for (std::size_t t = 0; t < frames; ++t) {
    for (std::size_t f = 0; f < spectrum.size(); ++f)
      spectrum[f] = grid.data(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(f));
    fft.inv(frame.data(), spectrum.data(), static_cast<Eigen::Index>(n));
    const std::size_t start = t * hop;
    for (std::size_t i = 0; i < n; ++i) {
      acc[start + i] += frame[i] * window[i];
      norm[start + i] += window[i] * window[i];
    }
  }

  SampleBuffer out;
  out.sample_rate = sample_rate;
  const std::size_t length = grid.source_length > 0 ? std::min(grid.source_length, span) : span;
  out.samples.resize(length);
  for (std::size_t i = 0; i < length; ++i) {
    out.samples[i] = norm[i] > 1e-12 ? acc[i] / norm[i] : 0.0;
  }
  return out;
}

}  // namespace kpfcp

#endif  // KPFCP_STFT_HPP
