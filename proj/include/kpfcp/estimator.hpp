#ifndef KPFCP_ESTIMATOR_HPP
#define KPFCP_ESTIMATOR_HPP

#include <cmath>
#include <cstdint>
#include <random>
#include <string>

#include "kpfcp/common.hpp"
#include "kpfcp/stft.hpp"

namespace kpfcp {

// Sources of the direct-path estimate consumed by the prediction stage.
// kExternal passes through a grid computed elsewhere (e.g. a neural network
// output read from disk).
enum class EstimatorKind { kOracle, kIdentity, kExternal };

inline std::string ToString(EstimatorKind k) {
  switch (k) {
    case EstimatorKind::kOracle: return "oracle";
    case EstimatorKind::kIdentity: return "identity";
    case EstimatorKind::kExternal: return "external";
  }
  return "?";
}

inline EstimatorKind ParseEstimatorKind(const std::string& s) {
  if (s == "oracle") return EstimatorKind::kOracle;
  if (s == "identity") return EstimatorKind::kIdentity;
  if (s == "external") return EstimatorKind::kExternal;
  throw ConfigError("estimator.kind: unknown estimator '" + s + "'");
}

struct EstimatorSpec {
  EstimatorKind kind = EstimatorKind::kOracle;
  double degradation = 0.0;
  std::uint64_t seed = 0;
};

inline void Validate(const EstimatorSpec& spec) {
  Require(std::isfinite(spec.degradation) && spec.degradation >= 0.0 && spec.degradation <= 1.0,
          "estimator.degradation must lie in [0, 1]");
}

/// Direct-path estimate. The oracle mixes the true direct path with complex
/// Gaussian noise whose realized per-frame RMS equals the frame RMS of the
/// truth; noise is drawn frame by frame so frame t depends only on frames <= t.
inline TFGrid Estimate(const EstimatorSpec& spec, const TFGrid& observed,
                       const TFGrid* direct_truth = nullptr, const TFGrid* external = nullptr) {
  Validate(spec);
  switch (spec.kind) {
    case EstimatorKind::kIdentity:
      return observed;
    case EstimatorKind::kExternal:
      Require(external != nullptr, "external estimator requires an estimate grid");
      Require(SameShape(*external, observed), "external estimate shape differs from observed");
      return *external;
    case EstimatorKind::kOracle:
      break;
  }
  Require(direct_truth != nullptr, "oracle estimator requires the direct-path truth");
  Require(SameShape(*direct_truth, observed), "direct-path truth shape differs from observed");

  TFGrid out = *direct_truth;
  const double d = spec.degradation;
  if (d == 0.0) return out;

  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const Eigen::Index bins = out.bins();
  CVector noise(bins);
  for (Eigen::Index t = 0; t < out.frames(); ++t) {
    double truth_power = 0.0, noise_power = 0.0;
    for (Eigen::Index f = 0; f < bins; ++f) {
      const double re = gauss(rng);
      const double im = gauss(rng);
      noise(f) = cplx(re, im);
      noise_power += re * re + im * im;
      truth_power += std::norm(direct_truth->data(t, f));
    }
    const double scale = noise_power > 0.0 ? std::sqrt(truth_power / noise_power) : 0.0;
    for (Eigen::Index f = 0; f < bins; ++f) {
      out.data(t, f) = (1.0 - d) * direct_truth->data(t, f) + d * scale * noise(f);
    }
  }
  return out;
}

}  // namespace kpfcp

#endif  // KPFCP_ESTIMATOR_HPP
