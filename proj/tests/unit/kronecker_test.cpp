#include <random>

#include <gtest/gtest.h>

#include "kpfcp/kronecker.hpp"
#include "oracles.hpp"

namespace {

using namespace kpfcp;

TEST(Kronecker, UnitFactorsExpandToUnit) {
  const KronShape s{1, 9, 9};
  EXPECT_EQ(KronExpand(CVector::Unit(9, 0), CVector::Unit(9, 0), s), CVector::Unit(81, 0));
}

TEST(Kronecker, ScalarCase) {
  const KronShape s{1, 1, 1};
  CVector a(1), b(1);
  a << cplx(2.0, 1.0);
  b << cplx(-0.5, 3.0);
  EXPECT_EQ(KronExpand(a, b, s)(0), a(0) * b(0));
}

TEST(Kronecker, ExpandMatchesExplicitKroneckerProducts) {
  std::mt19937_64 rng(1);
  for (const KronShape s : {KronShape{2, 3, 4}, KronShape{3, 5, 3}, KronShape{5, 9, 9}}) {
    const CVector g1 = oracle::RandomCVec(rng, s.n1()), g2 = oracle::RandomCVec(rng, s.n2());
    EXPECT_LT((KronExpand(g1, g2, s) - oracle::DenseKron(g1, g2, s.p, s.k1, s.k2)).cwiseAbs().maxCoeff(),
              1e-12);
  }
}

TEST(Kronecker, SvdFactorsReconstructFullRank) {
  std::mt19937_64 rng(2);
  for (const KronShape s : {KronShape{2, 3, 2}, KronShape{9, 9, 9}, KronShape{4, 4, 7}}) {
    const CVector g = oracle::RandomCVec(rng, s.k());
    const auto f = oracle::SvdFactors(g, s.p, s.k1, s.k2);
    EXPECT_LT((KronExpand(f.g1, f.g2, s) - g).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(Kronecker, TruncatedSvdIsBestLowRank) {
  // A rank-2 filter is recovered exactly by P = 2 factors.
  std::mt19937_64 rng(3);
  const KronShape s{2, 6, 5};
  const CVector g1 = oracle::RandomCVec(rng, s.n1()), g2 = oracle::RandomCVec(rng, s.n2());
  const CVector g = KronExpand(g1, g2, s);
  const auto f = oracle::SvdFactors(g, 2, 6, 5);
  EXPECT_LT((KronExpand(f.g1, f.g2, s) - g).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Kronecker, RegressorsMatchDenseConstruction) {
  std::mt19937_64 rng(4);
  for (const KronShape s : {KronShape{3, 4, 5}, KronShape{5, 9, 9}, KronShape{1, 1, 1}}) {
    const CVector g1 = oracle::RandomCVec(rng, s.n1()), g2 = oracle::RandomCVec(rng, s.n2());
    const CVector h = oracle::RandomCVec(rng, s.k());
    const auto r = MakeStackedRegressors(h, g1, g2, s);
    const CVector s2 = oracle::DenseG2Bar(g2, s.p, s.k1, s.k2).adjoint() * h;
    const CVector s1 = oracle::DenseG1Bar(g1, s.p, s.k1, s.k2).adjoint() * h;
    EXPECT_LT((r.s2 - s2).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((r.s1 - s1).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Kronecker, DenseFactorsRebuildFilter) {
  std::mt19937_64 rng(5);
  const KronShape s{3, 4, 5};
  const CVector g1 = oracle::RandomCVec(rng, s.n1()), g2 = oracle::RandomCVec(rng, s.n2());
  const CVector g = KronExpand(g1, g2, s);
  EXPECT_LT((oracle::DenseG2Bar(g2, 3, 4, 5) * g1 - g).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((oracle::DenseG1Bar(g1, 3, 4, 5) * g2 - g).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Kronecker, InnerProductIdentityOnRandomStates) {
  std::mt19937_64 rng(6);
  std::uniform_int_distribution<int> dim(1, 9);
  for (int trial = 0; trial < 1000; ++trial) {
    KronShape s{1, dim(rng), dim(rng)};
    s.p = std::uniform_int_distribution<int>(1, std::min(s.k1, s.k2))(rng);
    const CVector g1 = oracle::RandomCVec(rng, s.n1()), g2 = oracle::RandomCVec(rng, s.n2());
    const CVector h = oracle::RandomCVec(rng, s.k());
    const auto r = MakeStackedRegressors(h, g1, g2, s);
    const cplx full = KronExpand(g1, g2, s).dot(h);
    const double scale = 1.0 + std::abs(full);
    ASSERT_LT(std::abs(g1.dot(r.s2) - full), 1e-10 * scale) << "trial " << trial;
    ASSERT_LT(std::abs(g2.dot(r.s1) - full), 1e-10 * scale) << "trial " << trial;
  }
}

TEST(Kronecker, UnitHistorySelectsLeadingTaps) {
  std::mt19937_64 rng(7);
  const KronShape s{3, 4, 5};
  const CVector g1 = oracle::RandomCVec(rng, s.n1()), g2 = oracle::RandomCVec(rng, s.n2());
  const auto r = MakeStackedRegressors(CVector::Unit(s.k(), 0), g1, g2, s);
  for (int p = 0; p < s.p; ++p) {
    const CVector expected = std::conj(g2(p * s.k2)) * CVector::Unit(s.k1, 0);
    EXPECT_LT((r.s2.segment(p * s.k1, s.k1) - expected).cwiseAbs().maxCoeff(), 1e-15);
  }
}

TEST(Kronecker, ShapeMismatchErrors) {
  const KronShape s{2, 3, 4};
  EXPECT_THROW(KronExpand(CVector::Zero(5), CVector::Zero(8), s), ConfigError);
  EXPECT_THROW(KronExpand(CVector::Zero(6), CVector::Zero(7), s), ConfigError);
  EXPECT_THROW(MakeStackedRegressors(CVector::Zero(11), CVector::Zero(6), CVector::Zero(8), s),
               ConfigError);
}

}  // namespace
