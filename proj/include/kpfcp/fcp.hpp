#ifndef KPFCP_FCP_HPP
#define KPFCP_FCP_HPP

#include <algorithm>
#include <cmath>
#include <vector>

#include "kpfcp/common.hpp"
#include "kpfcp/lambda.hpp"
#include "kpfcp/mac_counter.hpp"
#include "kpfcp/parallel.hpp"
#include "kpfcp/rls.hpp"
#include "kpfcp/stft.hpp"

namespace kpfcp {

struct FcpParams {
  int k = 81;
  double alpha = 0.95;
  double sigma = 0.01;
  double lambda_floor = kDefaultLambdaFloor;
};

inline void Validate(const FcpParams& p) {
  Require(p.k >= 1, "fcp.k must be >= 1");
  Require(p.alpha > 0.0 && p.alpha <= 1.0, "fcp.alpha must lie in (0, 1]");
  Require(p.sigma >= 0.0 && std::isfinite(p.sigma), "fcp.sigma must be non-negative");
  Require(p.lambda_floor > 0.0, "fcp.lambda_floor must be positive");
}

/// Delay line of the last K direct-path estimates, newest first.
inline void PushHistory(CVector& history, cplx newest) {
  cplx* d = history.data();
  std::move_backward(d, d + history.size() - 1, d + history.size());
  d[0] = newest;
}

/// Full-length prediction filter state of one frequency bin.
struct FcpBinState {
  CVector g;
  CMatrix phi_inv;
  CVector history;
  CVector work;

  explicit FcpBinState(const FcpParams& p = {})
      : g(CVector::Zero(p.k)),
        phi_inv(CMatrix::Identity(p.k, p.k)),
        history(CVector::Zero(p.k)),
        work(p.k) {
    g(0) = 1.0;  // identity prediction: Z = g^H s_nn - S_nn = 0
  }
};

/// One frame of one bin. The output uses the updated filter:
/// s_hat = s_nn + y - g^H [s_nn(t), ..., s_nn(t-K+1)].
template <class Counter = NoMacCount>
cplx FcpStep(FcpBinState& st, cplx y, cplx s_nn, double lambda, const FcpParams& p,
             Counter& macs) {
  PushHistory(st.history, s_nn);
  WeightedRlsUpdate(st.g, st.phi_inv, st.history, y, lambda, p.alpha, st.work, macs);
  const cplx out = s_nn + y - st.g.dot(st.history);
  if constexpr (Counter::kEnabled) macs.Add(kComplexMac * static_cast<std::uint64_t>(p.k));
  if (!IsFinite(out)) throw NumericalError("fcp output is not finite");
  return out;
}

inline cplx FcpStep(FcpBinState& st, cplx y, cplx s_nn, double lambda, const FcpParams& p) {
  NoMacCount none;
  return FcpStep(st, y, s_nn, lambda, p, none);
}

namespace detail {

/// Threads a fresh per-bin state through all frames of every bin. The cost
/// weights come from a frame-level pre-pass, so bins are independent.
template <class State, class MakeState, class Step, class Counter>
TFGrid ProcessGrid(const TFGrid& observed, const TFGrid& s_nn, double sigma, double floor,
                   const ProcessOptions& opt, Counter* macs, MakeState make_state, Step step) {
  Require(SameShape(observed, s_nn), "observed and estimate grids differ in shape");
  const Eigen::MatrixXd lambda = LambdaGrid(observed.data, sigma, floor);
  TFGrid out = observed;
  const Eigen::Index frames = observed.frames();
  const unsigned workers = ResolveThreads(opt.threads, observed.bins());
  std::vector<Counter> counters(workers);
  ParallelForBins(observed.bins(), workers, [&](Eigen::Index f, unsigned w) {
    State st = make_state();
    Eigen::Index t = 0;
    try {
      for (; t < frames; ++t) {
        out.data(t, f) = step(st, observed.data(t, f), s_nn.data(t, f), lambda(t, f), counters[w]);
      }
    } catch (const NumericalError& e) {
      throw NumericalError(e.what(), t, f);
    }
  });
  if (macs != nullptr)
    for (const auto& c : counters) macs->Merge(c);
  return out;
}

}  // namespace detail

/// Frame-online FCP over a whole grid, one independent filter per bin.
template <class Counter = NoMacCount>
TFGrid FcpProcess(const TFGrid& observed, const TFGrid& s_nn, const FcpParams& p,
                  const ProcessOptions& opt = {}, Counter* macs = nullptr) {
  Validate(p);
  return detail::ProcessGrid<FcpBinState>(
      observed, s_nn, p.sigma, p.lambda_floor, opt, macs, [&] { return FcpBinState(p); },
      [&](FcpBinState& st, cplx y, cplx s, double lam, Counter& c) {
        return FcpStep(st, y, s, lam, p, c);
      });
}

}  // namespace kpfcp

#endif  // KPFCP_FCP_HPP
