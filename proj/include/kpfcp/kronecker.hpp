#ifndef KPFCP_KRONECKER_HPP
#define KPFCP_KRONECKER_HPP

#include <cstdint>

#include "kpfcp/common.hpp"
#include "kpfcp/mac_counter.hpp"

namespace kpfcp {

/// Shape of a Kronecker-factored filter of length K = k1 * k2 with p terms.
/// Stacked vectors hold p blocks: g1 has p blocks of k1 taps, g2 p blocks of
/// k2 taps, block-major (block p occupies [p*k, (p+1)*k)).
struct KronShape {
  int p = 1;
  int k1 = 1;
  int k2 = 1;

  int k() const noexcept { return k1 * k2; }
  int n1() const noexcept { return p * k1; }
  int n2() const noexcept { return p * k2; }
};

inline void CheckBlocks(const KronShape& s, const CVector& g1, const CVector& g2) {
  Require(s.p >= 1 && s.k1 >= 1 && s.k2 >= 1, "kronecker shape must be positive");
  Require(g1.size() == s.n1(), "g1 must hold p blocks of k1 taps");
  Require(g2.size() == s.n2(), "g2 must hold p blocks of k2 taps");
}

/// g = sum_p g2_p (x) g1_p; element k2 * K1 + k1 is sum_p g2_p[k2] g1_p[k1].
inline CVector KronExpand(const CVector& g1, const CVector& g2, const KronShape& s) {
  CheckBlocks(s, g1, g2);
  const Eigen::Map<const CMatrix> a(g1.data(), s.k1, s.p);
  const Eigen::Map<const CMatrix> b(g2.data(), s.k2, s.p);
  const CMatrix m = a * b.transpose();  // K1 x K2
  return Eigen::Map<const CVector>(m.data(), s.k());
}

// With the history viewed as the K1 x K2 matrix S[k1, k2] = h[k2 * K1 + k1]:
//   block p of the g1 regressor is S conj(g2_p)        (length K1)
//   block p of the g2 regressor is S^T conj(g1_p)      (length K2)
// so that g1^H s2 = g2^H s1 = kron_expand(g1, g2)^H h.

template <class Counter = NoMacCount>
void RegressorForG1(const CVector& history, const CVector& g2, const KronShape& s, CVector& out,
                    Counter& macs) {
  const Eigen::Map<const CMatrix> hist(history.data(), s.k1, s.k2);
  const Eigen::Map<const CMatrix> b(g2.data(), s.k2, s.p);
  Eigen::Map<CMatrix>(out.data(), s.k1, s.p).noalias() = hist * b.conjugate();
  if constexpr (Counter::kEnabled)
    macs.Add(kComplexMac * static_cast<std::uint64_t>(s.p) * static_cast<std::uint64_t>(s.k()));
}

template <class Counter = NoMacCount>
void RegressorForG2(const CVector& history, const CVector& g1, const KronShape& s, CVector& out,
                    Counter& macs) {
  const Eigen::Map<const CMatrix> hist(history.data(), s.k1, s.k2);
  const Eigen::Map<const CMatrix> a(g1.data(), s.k1, s.p);
  Eigen::Map<CMatrix>(out.data(), s.k2, s.p).noalias() = hist.transpose() * a.conjugate();
  if constexpr (Counter::kEnabled)
    macs.Add(kComplexMac * static_cast<std::uint64_t>(s.p) * static_cast<std::uint64_t>(s.k()));
}

struct StackedRegressors {
  CVector s2;  // regressor of g1, length p * k1
  CVector s1;  // regressor of g2, length p * k2
};

inline StackedRegressors MakeStackedRegressors(const CVector& history, const CVector& g1,
                                               const CVector& g2, const KronShape& s) {
  CheckBlocks(s, g1, g2);
  Require(history.size() == s.k(), "history must hold k1 * k2 samples");
  StackedRegressors r{CVector(s.n1()), CVector(s.n2())};
  NoMacCount none;
  RegressorForG1(history, g2, s, r.s2, none);
  RegressorForG2(history, g1, s, r.s1, none);
  return r;
}

}  // namespace kpfcp

#endif  // KPFCP_KRONECKER_HPP
