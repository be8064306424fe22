#ifndef KPFCP_DEREVERB_HPP
#define KPFCP_DEREVERB_HPP

#include <string>
#include <vector>

#include "kpfcp/common.hpp"
#include "kpfcp/fcp.hpp"
#include "kpfcp/kpfcp.hpp"
#include "kpfcp/lambda.hpp"
#include "kpfcp/parallel.hpp"
#include "kpfcp/stft.hpp"

namespace kpfcp {

enum class Algorithm { kFcp, kKpfcp };

inline std::string ToString(Algorithm a) { return a == Algorithm::kFcp ? "fcp" : "kpfcp"; }

inline Algorithm ParseAlgorithm(const std::string& s) {
  if (s == "fcp") return Algorithm::kFcp;
  if (s == "kpfcp") return Algorithm::kKpfcp;
  throw ConfigError("algorithm.name: expected 'fcp' or 'kpfcp', got '" + s + "'");
}

struct AlgorithmSpec {
  Algorithm algorithm = Algorithm::kKpfcp;
  FcpParams fcp;
  KpfcpParams kpfcp;
};

inline void Validate(const AlgorithmSpec& a) {
  if (a.algorithm == Algorithm::kFcp)
    Validate(a.fcp);
  else
    Validate(a.kpfcp);
}

template <class Counter = NoMacCount>
TFGrid Dereverberate(const AlgorithmSpec& spec, const TFGrid& observed, const TFGrid& s_nn,
                     const ProcessOptions& opt = {}, Counter* macs = nullptr) {
  if (spec.algorithm == Algorithm::kFcp) return FcpProcess(observed, s_nn, spec.fcp, opt, macs);
  return KpfcpProcess(observed, s_nn, spec.kpfcp, opt, macs);
}

/// Streaming front end: accepts one frame (all bins) at a time and emits the
/// dereverberated frame immediately. Produces the same values as the grid
/// functions.
class FrameOnlineProcessor {
 public:
  FrameOnlineProcessor(const AlgorithmSpec& spec, Eigen::Index bins)
      : spec_(spec),
        tracker_(Sigma(spec), Floor(spec)),
        lambda_(bins) {
    Validate(spec);
    if (spec.algorithm == Algorithm::kFcp)
      fcp_.assign(static_cast<std::size_t>(bins), FcpBinState(spec.fcp));
    else
      kp_.assign(static_cast<std::size_t>(bins), KpfcpBinState(spec.kpfcp));
  }

  CVector Push(const CVector& y, const CVector& s_nn) {
    Require(y.size() == lambda_.size() && s_nn.size() == lambda_.size(),
            "frame size differs from the configured bin count");
    WeightFrame(tracker_, y, lambda_);
    CVector out(y.size());
    NoMacCount none;
    for (Eigen::Index f = 0; f < y.size(); ++f) {
      try {
        out(f) = spec_.algorithm == Algorithm::kFcp
                     ? FcpStep(fcp_[f], y(f), s_nn(f), lambda_(f), spec_.fcp, none)
                     : KpfcpStep(kp_[f], y(f), s_nn(f), lambda_(f), spec_.kpfcp, none);
      } catch (const NumericalError& e) {
        throw NumericalError(e.what(), frame_, f);
      }
    }
    ++frame_;
    return out;
  }

 private:
  static double Sigma(const AlgorithmSpec& s) {
    return s.algorithm == Algorithm::kFcp ? s.fcp.sigma : s.kpfcp.sigma;
  }
  static double Floor(const AlgorithmSpec& s) {
    return s.algorithm == Algorithm::kFcp ? s.fcp.lambda_floor : s.kpfcp.lambda_floor;
  }

  AlgorithmSpec spec_;
  LambdaTracker tracker_;
  Eigen::RowVectorXd lambda_;
  std::vector<FcpBinState> fcp_;
  std::vector<KpfcpBinState> kp_;
  Eigen::Index frame_ = 0;
};

}  // namespace kpfcp

#endif  // KPFCP_DEREVERB_HPP
