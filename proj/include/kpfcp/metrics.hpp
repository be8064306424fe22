#ifndef KPFCP_METRICS_HPP
#define KPFCP_METRICS_HPP

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "kpfcp/common.hpp"
#include "kpfcp/stft.hpp"

namespace kpfcp::metrics {

/// Constants of the frequency-weighted segmental SNR.
struct FwsnrConfig {
  double frame_ms = 25.0;
  double hop_ms = 10.0;
  int bands = 25;          // mel-spaced triangular bands
  double f_low = 50.0;     // Hz
  double f_high = 8000.0;  // Hz
  double gamma = 0.2;      // band weight = |R|^gamma
  double min_db = -10.0;
  double max_db = 35.0;
};

inline double HzToMel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
inline double MelToHz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

/// bands x (nfft/2 + 1) triangular weights.
inline Eigen::MatrixXd MelFilterbank(const FwsnrConfig& cfg, std::size_t nfft, int sample_rate) {
  const std::size_t bins = nfft / 2 + 1;
  Eigen::MatrixXd fb = Eigen::MatrixXd::Zero(cfg.bands, static_cast<Eigen::Index>(bins));
  const double m_lo = HzToMel(cfg.f_low);
  const double m_hi = HzToMel(std::min(cfg.f_high, sample_rate / 2.0));
  std::vector<double> edge(static_cast<std::size_t>(cfg.bands) + 2);
  for (std::size_t i = 0; i < edge.size(); ++i)
    edge[i] = MelToHz(m_lo + (m_hi - m_lo) * static_cast<double>(i) / (cfg.bands + 1));
  for (int j = 0; j < cfg.bands; ++j) {
    const double lo = edge[j], mid = edge[j + 1], hi = edge[j + 2];
    for (std::size_t k = 0; k < bins; ++k) {
      const double f = static_cast<double>(k) * sample_rate / static_cast<double>(nfft);
      double w = 0.0;
      if (f >= lo && f <= mid)
        w = (f - lo) / (mid - lo);
      else if (f > mid && f <= hi)
        w = (hi - f) / (hi - mid);
      fb(j, static_cast<Eigen::Index>(k)) = w;
    }
  }
  return fb;
}

/// Per-frame FWSNR values in dB; frames whose reference carries no band
/// energy are skipped.
inline std::vector<double> FwsnrFrames(const SampleBuffer& reference, const SampleBuffer& processed,
                                       const FwsnrConfig& cfg = {}) {
  Require(reference.sample_rate == processed.sample_rate, "fwsnr: sample rates differ");
  const int fs = reference.sample_rate;
  const std::size_t n = std::min(reference.size(), processed.size());
  Require(n > 0, "fwsnr: empty input");
  const auto len = static_cast<std::size_t>(std::lround(cfg.frame_ms * fs / 1000.0));
  const auto hop = static_cast<std::size_t>(std::lround(cfg.hop_ms * fs / 1000.0));
  Require(len >= 2 && hop >= 1, "fwsnr: frame too short");
  std::size_t nfft = 2;
  while (nfft < len) nfft <<= 1;
  const Eigen::MatrixXd fb = MelFilterbank(cfg, nfft, fs);

  std::vector<double> window(len);
  for (std::size_t i = 0; i < len; ++i)
    window[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / len);

  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  std::vector<double> ref(nfft), err(nfft);
  std::vector<cplx> ref_spec(nfft / 2 + 1), err_spec(nfft / 2 + 1);
  Eigen::VectorXd ref_pow(static_cast<Eigen::Index>(nfft / 2 + 1));
  Eigen::VectorXd err_pow(static_cast<Eigen::Index>(nfft / 2 + 1));

  std::vector<double> values;
  for (std::size_t start = 0; start == 0 || start + len <= n; start += hop) {
    std::fill(ref.begin(), ref.end(), 0.0);
    std::fill(err.begin(), err.end(), 0.0);
    for (std::size_t i = 0; i < len && start + i < n; ++i) {
      const double r = reference.samples[start + i];
      ref[i] = window[i] * r;
      err[i] = window[i] * (r - processed.samples[start + i]);
    }
    fft.fwd(ref_spec.data(), ref.data(), static_cast<Eigen::Index>(nfft));
    fft.fwd(err_spec.data(), err.data(), static_cast<Eigen::Index>(nfft));
    for (std::size_t k = 0; k < ref_spec.size(); ++k) {
      ref_pow(static_cast<Eigen::Index>(k)) = std::norm(ref_spec[k]);
      err_pow(static_cast<Eigen::Index>(k)) = std::norm(err_spec[k]);
    }
    const Eigen::VectorXd ref_band = fb * ref_pow;
    const Eigen::VectorXd err_band = fb * err_pow;

    double num = 0.0, den = 0.0;
    for (int j = 0; j < cfg.bands; ++j) {
      if (ref_band(j) <= 0.0) continue;
      const double w = std::pow(ref_band(j), cfg.gamma / 2.0);
      const double snr = err_band(j) > 0.0 ? 10.0 * std::log10(ref_band(j) / err_band(j))
                                           : cfg.max_db;
      num += w * std::clamp(snr, cfg.min_db, cfg.max_db);
      den += w;
    }
    if (den > 0.0) values.push_back(std::clamp(num / den, cfg.min_db, cfg.max_db));
    if (len > n) break;
  }
  return values;
}

/// Frequency-weighted segmental SNR (dB) of processed against reference.
/// Inputs are trimmed to the shorter length.
inline double Fwsnr(const SampleBuffer& reference, const SampleBuffer& processed,
                    const FwsnrConfig& cfg = {}) {
  const auto values = FwsnrFrames(reference, processed, cfg);
  Require(!values.empty(), "fwsnr: reference signal is silent");
  double acc = 0.0;
  for (double v : values) acc += v;
  return acc / static_cast<double>(values.size());
}

inline double Delta(double metric_out, double metric_observed) {
  Require(std::isfinite(metric_out) && std::isfinite(metric_observed),
          "delta: metrics must be finite");
  return metric_out - metric_observed;
}

struct SegmentValue {
  double time_s;
  double value_db;
};

struct SegmentTrack {
  std::vector<SegmentValue> per_segment;
  std::vector<SegmentValue> smoothed;
};

/// Centered moving average over `width` points, truncated at the edges.
inline std::vector<double> MovingAverage(const std::vector<double>& x, std::size_t width) {
  Require(width % 2 == 1, "moving average width must be odd");
  const std::size_t half = width / 2;
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const std::size_t lo = i >= half ? i - half : 0;
    const std::size_t hi = std::min(x.size() - 1, i + half);
    double acc = 0.0;
    for (std::size_t j = lo; j <= hi; ++j) acc += x[j];
    out[i] = acc / static_cast<double>(hi - lo + 1);
  }
  return out;
}

/// FWSNR on consecutive non-overlapping segments, then smoothed with a
/// centered moving average spanning smooth_s. A trailing partial segment is
/// dropped.
inline SegmentTrack SegmentalTrack(const SampleBuffer& reference, const SampleBuffer& processed,
                                   double segment_s = 1.0, double smooth_s = 3.0,
                                   const FwsnrConfig& cfg = {}) {
  Require(segment_s > 0 && smooth_s > 0, "segment and smoothing spans must be positive");
  const int fs = reference.sample_rate;
  const auto seg_len = static_cast<std::size_t>(std::lround(segment_s * fs));
  const std::size_t n = std::min(reference.size(), processed.size());
  Require(n >= seg_len, "signal is shorter than one segment");

  SegmentTrack track;
  std::vector<double> values;
  for (std::size_t s = 0; (s + 1) * seg_len <= n; ++s) {
    const auto first = static_cast<std::ptrdiff_t>(s * seg_len);
    const auto last = static_cast<std::ptrdiff_t>((s + 1) * seg_len);
    SampleBuffer r{{reference.samples.begin() + first, reference.samples.begin() + last}, fs};
    SampleBuffer p{{processed.samples.begin() + first, processed.samples.begin() + last}, fs};
    values.push_back(Fwsnr(r, p, cfg));
    track.per_segment.push_back({static_cast<double>(s) * segment_s, values.back()});
  }
  const auto width = static_cast<std::size_t>(std::lround(smooth_s / segment_s));
  const auto smooth = MovingAverage(values, std::max<std::size_t>(1, width));
  for (std::size_t i = 0; i < smooth.size(); ++i)
    track.smoothed.push_back({track.per_segment[i].time_s, smooth[i]});
  return track;
}

struct MetricsReport {
  double fwsnr_db = 0.0;
  double observed_fwsnr_db = 0.0;
  double delta_fwsnr_db = 0.0;
  std::vector<SegmentValue> per_segment;
  std::vector<SegmentValue> smoothed;
  std::optional<double> pesq;           // filled from an external tool, if any
  std::optional<double> observed_pesq;
};

/// Full report of processed vs observed, both scored against the direct-path
/// reference. The segmental track is omitted for signals shorter than one segment.
inline MetricsReport Evaluate(const SampleBuffer& reference, const SampleBuffer& observed,
                              const SampleBuffer& processed, const FwsnrConfig& cfg = {}) {
  MetricsReport r;
  r.fwsnr_db = Fwsnr(reference, processed, cfg);
  r.observed_fwsnr_db = Fwsnr(reference, observed, cfg);
  r.delta_fwsnr_db = Delta(r.fwsnr_db, r.observed_fwsnr_db);
  if (std::min(reference.size(), processed.size()) >= static_cast<std::size_t>(reference.sample_rate)) {
    auto track = SegmentalTrack(reference, processed, 1.0, 3.0, cfg);
    r.per_segment = std::move(track.per_segment);
    r.smoothed = std::move(track.smoothed);
  }
  return r;
}

}  // namespace kpfcp::metrics

#endif  // KPFCP_METRICS_HPP
