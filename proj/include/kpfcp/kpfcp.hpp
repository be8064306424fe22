#ifndef KPFCP_KPFCP_HPP
#define KPFCP_KPFCP_HPP

#include <algorithm>
#include <cmath>
#include <string>

#include "kpfcp/common.hpp"
#include "kpfcp/fcp.hpp"
#include "kpfcp/kronecker.hpp"
#include "kpfcp/lambda.hpp"
#include "kpfcp/mac_counter.hpp"
#include "kpfcp/parallel.hpp"
#include "kpfcp/rls.hpp"
#include "kpfcp/stft.hpp"

namespace kpfcp {

// Initial short filters. Both start from g1_1 = e1, g2_1 = e1 and zero
// g1_p (p > 1), so the expanded filter is e1 and Z = 0 at start.
//   kLagSelect:         g2_p = e_p. Term p initially sees history lag block p.
//   kLeadingBlockOnly:  g2_p = 0. Blocks p > 1 never receive gain; the
//                       filter degenerates to P = 1. Kept for comparison.
enum class KpInit { kLagSelect, kLeadingBlockOnly };

struct KpfcpParams {
  int k1 = 9;
  int k2 = 9;
  int p = 5;
  double alpha1 = 0.95;
  double alpha2 = 0.95;
  double sigma = 0.01;
  double lambda_floor = kDefaultLambdaFloor;
  KpInit init = KpInit::kLagSelect;

  KronShape shape() const noexcept { return {p, k1, k2}; }
};

inline void Validate(const KpfcpParams& p) {
  Require(p.k1 >= 1 && p.k2 >= 1, "kpfcp.k1 and kpfcp.k2 must be >= 1");
  Require(p.p >= 1, "kpfcp.p must be >= 1");
  Require(p.p <= std::min(p.k1, p.k2),
          "kpfcp.p = " + std::to_string(p.p) + " violates P <= min(K1, K2) = " +
              std::to_string(std::min(p.k1, p.k2)));
  Require(p.alpha1 > 0.0 && p.alpha1 <= 1.0, "kpfcp.alpha1 must lie in (0, 1]");
  Require(p.alpha2 > 0.0 && p.alpha2 <= 1.0, "kpfcp.alpha2 must lie in (0, 1]");
  Require(p.sigma >= 0.0 && std::isfinite(p.sigma), "kpfcp.sigma must be non-negative");
  Require(p.lambda_floor > 0.0, "kpfcp.lambda_floor must be positive");
}

struct KpfcpBinState {
  KronShape shape;
  CVector g1;        // p blocks of k1 taps
  CVector g2;        // p blocks of k2 taps
  CMatrix phi2_inv;  // inverse correlation of the g1 regressor s2
  CMatrix phi1_inv;  // inverse correlation of the g2 regressor s1
  CVector history;   // last k1 * k2 direct-path estimates, newest first
  CVector s2, s1, work2, work1;

  explicit KpfcpBinState(const KpfcpParams& p = {})
      : shape(p.shape()),
        g1(CVector::Zero(shape.n1())),
        g2(CVector::Zero(shape.n2())),
        phi2_inv(CMatrix::Identity(shape.n1(), shape.n1())),
        phi1_inv(CMatrix::Identity(shape.n2(), shape.n2())),
        history(CVector::Zero(shape.k())),
        s2(shape.n1()),
        s1(shape.n2()),
        work2(shape.n1()),
        work1(shape.n2()) {
    g1(0) = 1.0;
    g2(0) = 1.0;
    if (p.init == KpInit::kLagSelect) {
      for (int b = 1; b < shape.p; ++b) g2(b * shape.k2 + b) = 1.0;
    }
  }
};

/// One frame of one bin: RLS update of g1 against s2 (built from the prior
/// g2), then of g2 against s1 (built from the updated g1). The output uses the
/// updated g2: s_hat = s_nn + y - g2^H s1.
template <class Counter = NoMacCount>
cplx KpfcpStep(KpfcpBinState& st, cplx y, cplx s_nn, double lambda, const KpfcpParams& p,
               Counter& macs) {
  PushHistory(st.history, s_nn);
  RegressorForG1(st.history, st.g2, st.shape, st.s2, macs);
  WeightedRlsUpdate(st.g1, st.phi2_inv, st.s2, y, lambda, p.alpha1, st.work2, macs);
  RegressorForG2(st.history, st.g1, st.shape, st.s1, macs);
  WeightedRlsUpdate(st.g2, st.phi1_inv, st.s1, y, lambda, p.alpha2, st.work1, macs);
  const cplx out = s_nn + y - st.g2.dot(st.s1);
  if constexpr (Counter::kEnabled)
    macs.Add(kComplexMac * static_cast<std::uint64_t>(st.shape.n2()));
  if (!IsFinite(out)) throw NumericalError("kp-fcp output is not finite");
  return out;
}

inline cplx KpfcpStep(KpfcpBinState& st, cplx y, cplx s_nn, double lambda, const KpfcpParams& p) {
  NoMacCount none;
  return KpfcpStep(st, y, s_nn, lambda, p, none);
}

/// Frame-online KP-FCP over a whole grid, one independent state per bin.
template <class Counter = NoMacCount>
TFGrid KpfcpProcess(const TFGrid& observed, const TFGrid& s_nn, const KpfcpParams& p,
                    const ProcessOptions& opt = {}, Counter* macs = nullptr) {
  Validate(p);
  return detail::ProcessGrid<KpfcpBinState>(
      observed, s_nn, p.sigma, p.lambda_floor, opt, macs, [&] { return KpfcpBinState(p); },
      [&](KpfcpBinState& st, cplx y, cplx s, double lam, Counter& c) {
        return KpfcpStep(st, y, s, lam, p, c);
      });
}

}  // namespace kpfcp

#endif  // KPFCP_KPFCP_HPP
