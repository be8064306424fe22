#include <random>

#include <gtest/gtest.h>

#include "kpfcp/dereverb.hpp"
#include "kpfcp/estimator.hpp"
#include "kpfcp/kpfcp.hpp"
#include "kpfcp/metrics.hpp"
#include "oracles.hpp"
#include "scenes.hpp"

namespace {

using namespace kpfcp;

KpfcpParams Params(int p, int k1, int k2, double alpha = 0.95) {
  KpfcpParams q;
  q.p = p;
  q.k1 = k1;
  q.k2 = k2;
  q.alpha1 = q.alpha2 = alpha;
  return q;
}

// Algorithm 1 evaluated with dense matrices: each sub-filter is the solution
// of its own weighted normal equations over the regressors seen so far.
class DenseKpfcp {
 public:
  DenseKpfcp(const KpfcpParams& p, const KpfcpBinState& init)
      : p_(p), g1_(init.g1), g2_(init.g2), ne1_(init.g1, p.alpha1), ne2_(init.g2, p.alpha2),
        history_(CVector::Zero(p.k1 * p.k2)) {}

  cplx Step(cplx y, cplx s_nn, double lambda) {
    for (Eigen::Index i = history_.size() - 1; i > 0; --i) history_(i) = history_(i - 1);
    history_(0) = s_nn;
    const CVector s2 = oracle::DenseG2Bar(g2_, p_.p, p_.k1, p_.k2).adjoint() * history_;
    ne1_.Add(s2, y, lambda);
    g1_ = ne1_.Solve();
    const CVector s1 = oracle::DenseG1Bar(g1_, p_.p, p_.k1, p_.k2).adjoint() * history_;
    ne2_.Add(s1, y, lambda);
    g2_ = ne2_.Solve();
    return s_nn + y - g2_.dot(s1);
  }

  const CVector& g1() const { return g1_; }
  const CVector& g2() const { return g2_; }

 private:
  KpfcpParams p_;
  CVector g1_, g2_;
  oracle::NormalEquations ne1_, ne2_;
  CVector history_;
};

TEST(Kpfcp, InitialFilterIsIdentityPrediction) {
  for (auto init : {KpInit::kLagSelect, KpInit::kLeadingBlockOnly}) {
    KpfcpParams p;
    p.init = init;
    const KpfcpBinState st(p);
    EXPECT_EQ(KronExpand(st.g1, st.g2, st.shape), CVector::Unit(81, 0));
    EXPECT_EQ(st.phi1_inv, CMatrix::Identity(45, 45));
    EXPECT_EQ(st.phi2_inv, CMatrix::Identity(45, 45));
  }
}

TEST(Kpfcp, MatchesDenseAlgorithmOracle) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.2, 2.0);
  for (const auto& p : {Params(2, 3, 4, 1.0), Params(3, 3, 3, 0.9), Params(1, 5, 2, 0.97)}) {
    KpfcpBinState st(p);
    DenseKpfcp ref(p, st);
    for (int t = 0; t < 60; ++t) {
      const CVector d = oracle::RandomCVec(rng, 2);
      const double lambda = u(rng);
      const cplx out = KpfcpStep(st, d(1), d(0), lambda, p);
      const cplx expected = ref.Step(d(1), d(0), lambda);
      ASSERT_LT(std::abs(out - expected), 1e-8) << "frame " << t;
      ASSERT_LT((st.g1 - ref.g1()).cwiseAbs().maxCoeff(), 1e-8);
      ASSERT_LT((st.g2 - ref.g2()).cwiseAbs().maxCoeff(), 1e-8);
    }
  }
}

TEST(Kpfcp, FrozenSecondFilterReducesToWeightedLeastSquares) {
  const auto p = Params(2, 3, 3, 1.0);
  KpfcpBinState st(p);
  std::mt19937_64 rng(2);
  st.g2 = oracle::RandomCVec(rng, p.p * p.k2);
  oracle::NormalEquations ne(st.g1, 1.0);
  NoMacCount none;
  for (int t = 0; t < 100; ++t) {
    const CVector d = oracle::RandomCVec(rng, 2);
    PushHistory(st.history, d(0));
    RegressorForG1(st.history, st.g2, st.shape, st.s2, none);
    WeightedRlsUpdate(st.g1, st.phi2_inv, st.s2, d(1), 1.0, 1.0, st.work2, none);
    ne.Add(st.s2, d(1), 1.0);
  }
  EXPECT_LT((st.g1 - ne.Solve()).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Kpfcp, ZeroSecondFilterFreezesFirst) {
  // With g2 = 0 the regressor of g1 vanishes, so only g2 adapts in that frame.
  const auto p = Params(2, 3, 3);
  KpfcpBinState st(p);
  st.g2.setZero();
  const CVector g1_before = st.g1;
  std::mt19937_64 rng(3);
  const CVector d = oracle::RandomCVec(rng, 2);
  KpfcpStep(st, d(1), d(0), 1.0, p);
  EXPECT_EQ(st.g1, g1_before);
  EXPECT_GT(st.g2.norm(), 0.0);
}

TEST(Kpfcp, AllZeroInitIsFixedPoint) {
  const auto p = Params(2, 3, 3);
  KpfcpBinState st(p);
  st.g1.setZero();
  st.g2.setZero();
  std::mt19937_64 rng(4);
  for (int t = 0; t < 50; ++t) {
    const CVector d = oracle::RandomCVec(rng, 2);
    EXPECT_EQ(KpfcpStep(st, d(1), d(0), 1.0, p), d(0) + d(1));
  }
  EXPECT_EQ(st.g1.norm(), 0.0);
  EXPECT_EQ(st.g2.norm(), 0.0);
}

TEST(Kpfcp, LeadingBlockOnlyInitNeverActivatesOtherTerms) {
  auto p = Params(3, 4, 4);
  p.init = KpInit::kLeadingBlockOnly;
  KpfcpBinState st(p);
  std::mt19937_64 rng(5);
  for (int t = 0; t < 300; ++t) {
    const CVector d = oracle::RandomCVec(rng, 2);
    KpfcpStep(st, d(1), d(0), 0.5 + std::norm(d(1)), p);
  }
  EXPECT_EQ(st.g1.tail(8).norm(), 0.0);
  EXPECT_EQ(st.g2.tail(8).norm(), 0.0);

  p.init = KpInit::kLagSelect;
  KpfcpBinState active(p);
  std::mt19937_64 rng2(5);
  for (int t = 0; t < 300; ++t) {
    const CVector d = oracle::RandomCVec(rng2, 2);
    KpfcpStep(active, d(1), d(0), 0.5 + std::norm(d(1)), p);
  }
  EXPECT_GT(active.g1.tail(8).norm(), 0.0);
}

TEST(Kpfcp, StepKeepsKroneckerIdentityAndHermitianState) {
  const KpfcpParams p;  // P = 5, K1 = K2 = 9
  KpfcpBinState st(p);
  std::mt19937_64 rng(6);
  for (int t = 0; t < 3000; ++t) {
    const CVector d = oracle::RandomCVec(rng, 2);
    const cplx out = KpfcpStep(st, d(1), d(0), 0.1 + std::norm(d(1)), p);
    const cplx full = KronExpand(st.g1, st.g2, st.shape).dot(st.history);
    ASSERT_LT(std::abs((d(0) + d(1) - out) - full), 1e-10 * (1.0 + std::abs(full)));
  }
  EXPECT_LT((st.phi1_inv - st.phi1_inv.adjoint()).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_LT((st.phi2_inv - st.phi2_inv.adjoint()).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_TRUE(st.phi1_inv.allFinite() && st.phi2_inv.allFinite());
}

TEST(Kpfcp, ZeroGridGivesZeroOutput) {
  TFGrid zero;
  zero.data = CMatrix::Zero(30, 257);
  const auto out = KpfcpProcess(zero, zero, KpfcpParams{});
  EXPECT_EQ(out.data.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Kpfcp, IdentityEstimatorIsFixedPoint) {
  const auto y = scenes::RandomGrid(50, 20, 7);
  EXPECT_EQ(KpfcpProcess(y, y, KpfcpParams{}).data, y.data);
}

TEST(Kpfcp, CausalDeterministicAndThreadInvariant) {
  const auto y = scenes::RandomGrid(40, 29, 8);
  auto s = scenes::RandomGrid(40, 29, 9);
  s.data = 0.6 * y.data + 0.4 * s.data;
  const auto p = Params(3, 4, 5);
  const auto full = KpfcpProcess(y, s, p);
  EXPECT_EQ(KpfcpProcess(y, s, p).data, full.data);
  EXPECT_EQ(KpfcpProcess(scenes::Head(y, 13), scenes::Head(s, 13), p).data, full.data.topRows(13));
  EXPECT_EQ(KpfcpProcess(y, s, p, ProcessOptions{3}).data, full.data);
  EXPECT_EQ(KpfcpProcess(y, s, p, ProcessOptions{29}).data, full.data);

  AlgorithmSpec spec;
  spec.kpfcp = p;
  FrameOnlineProcessor online(spec, y.bins());
  for (Eigen::Index t = 0; t < y.frames(); ++t) {
    const CVector o = online.Push(y.data.row(t).transpose(), s.data.row(t).transpose());
    ASSERT_EQ(o.transpose(), full.data.row(t));
  }
}

TEST(Kpfcp, ValidationCitesConstraint) {
  try {
    Validate(Params(10, 9, 9));
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("P <= min(K1, K2)"), std::string::npos);
  }
  EXPECT_THROW(Validate(Params(0, 9, 9)), ConfigError);
  EXPECT_THROW(Validate(Params(2, 9, 9, 0.0)), ConfigError);
  EXPECT_NO_THROW(Validate(Params(9, 9, 9)));
}

TEST(Kpfcp, HigherOrderHelpsOnReverberantScene) {
  const auto sc = scenes::Reverberant(8.0, 0.4, 25.0, 31);
  const auto s_nn = Estimate({EstimatorKind::kOracle, 0.1, 5}, sc.y, &sc.s);
  const double observed = metrics::Fwsnr(sc.audio.direct_truth, sc.audio.observed);
  auto gain = [&](int p) {
    const auto out = Synthesize(KpfcpProcess(sc.y, s_nn, Params(p, 9, 9)));
    return metrics::Fwsnr(sc.audio.direct_truth, out) - observed;
  };
  const double g3 = gain(3), g5 = gain(5);
  EXPECT_GT(g3, 0.0);
  EXPECT_GE(g5, g3);
}

}  // namespace
