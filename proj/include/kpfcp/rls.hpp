#ifndef KPFCP_RLS_HPP
#define KPFCP_RLS_HPP

#include <cmath>
#include <cstdint>

#include "kpfcp/common.hpp"
#include "kpfcp/mac_counter.hpp"

namespace kpfcp {

/// One exponentially weighted RLS step with per-sample weight 1/lambda:
///
///   e     = y - g^H s
///   kappa = P s / (alpha lambda + s^H P s)
///   P     = (P - kappa s^H P) / alpha
///   g     = g + kappa conj(e)
///
/// P is kept exactly Hermitian, so s^H P is taken as (P s)^H. Returns the
/// prior error e. Throws NumericalError when the state stops being finite.
template <class Counter>
cplx WeightedRlsUpdate(CVector& g, CMatrix& phi_inv, const CVector& s, cplx y, double lambda,
                       double alpha, CVector& work, Counter& macs) {
  const auto n = static_cast<std::uint64_t>(s.size());
  const cplx e = y - g.dot(s);
  work.noalias() = phi_inv * s;
  const double q = s.dot(work).real();
  const double denom = alpha * lambda + q;
  if (!IsFinite(e) || !std::isfinite(denom) || denom <= 0.0) {
    throw NumericalError("rls error or gain denominator is not finite");
  }
  work *= 1.0 / denom;  // work is now the gain kappa
  g.noalias() += work * std::conj(e);

  // (P - kappa (P s)^H) / alpha, using P s = denom * kappa.
  // Written on interleaved doubles: Eigen's complex outer product does not
  // vectorize well without AVX.
  const Eigen::Index dim = phi_inv.rows();
  const double* kd = reinterpret_cast<const double*>(work.data());
  for (Eigen::Index j = 0; j < dim; ++j) {
    const double cr = denom * work(j).real(), ci = -denom * work(j).imag();
    double* col = reinterpret_cast<double*>(phi_inv.col(j).data());
    for (Eigen::Index i = 0; i < dim; ++i) {
      const double kr = kd[2 * i], ki = kd[2 * i + 1];
      col[2 * i] -= kr * cr - ki * ci;
      col[2 * i + 1] -= kr * ci + ki * cr;
    }
  }
  const double half_inv_alpha = 0.5 / alpha;
  for (Eigen::Index j = 0; j < dim; ++j) {
    for (Eigen::Index i = 0; i < j; ++i) {
      const cplx v = half_inv_alpha * (phi_inv(i, j) + std::conj(phi_inv(j, i)));
      phi_inv(i, j) = v;
      phi_inv(j, i) = std::conj(v);
    }
    phi_inv(j, j) = cplx(2.0 * half_inv_alpha * phi_inv(j, j).real(), 0.0);
  }
  if (!IsFinite(g(0)) || !std::isfinite(phi_inv(0, 0).real())) {
    throw NumericalError("rls state became non-finite");
  }

  if constexpr (Counter::kEnabled) {
    macs.Add(kComplexMac * n);          // prior error
    macs.Add(kComplexMac * n * n);      // P s
    macs.Add(kComplexMac * n);          // s^H P s
    macs.Add(1 + kRealComplexMac * n);  // gain normalization
    macs.Add(kComplexMac * n);          // filter update
    macs.Add(kRealComplexMac * n + kComplexMac * n * n);  // rank-one downdate
    macs.Add(kRealComplexMac * n * (n - 1) / 2 + n);      // 1/alpha scaling, Hermitian half
  }
  return e;
}

}  // namespace kpfcp

#endif  // KPFCP_RLS_HPP
