#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "kpfcp/metrics.hpp"
#include "kpfcp/speech.hpp"
#include "oracles.hpp"

namespace {

using namespace kpfcp;
using metrics::Fwsnr;

SampleBuffer Noise(std::size_t n, std::uint64_t seed, double scale = 0.1) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, scale);
  SampleBuffer x{std::vector<double>(n), 16000};
  for (double& v : x.samples) v = g(rng);
  return x;
}

SampleBuffer Scaled(const SampleBuffer& x, double a) {
  SampleBuffer y = x;
  for (double& v : y.samples) v *= a;
  return y;
}

TEST(Metrics, IdenticalSignalsHitCeiling) {
  const auto r = speech::SyntheticUtterance(2.0, 1);
  EXPECT_DOUBLE_EQ(Fwsnr(r, r), 35.0);
  const auto n = Noise(8000, 2);
  EXPECT_DOUBLE_EQ(Fwsnr(n, n), 35.0);
}

TEST(Metrics, SignFlipMatchesBandOracle) {
  // R - P = 2R, so every band sits at 10 log10(1/4) = -6.02 dB.
  const auto r = Noise(16000, 3);
  const auto p = Scaled(r, -1.0);
  const double value = Fwsnr(r, p);
  EXPECT_NEAR(value, oracle::Fwsnr(r.samples, p.samples), 1e-9);
  EXPECT_NEAR(value, -20.0 * std::log10(2.0), 1e-9);
}

TEST(Metrics, UniformTenDbDegradation) {
  const auto r = speech::SyntheticUtterance(2.0, 4);
  const auto p = Scaled(r, 1.0 - std::pow(10.0, -0.5));  // |R - P|^2 = |R|^2 / 10 in every band
  EXPECT_NEAR(Fwsnr(r, p), 10.0, 1e-9);
}

TEST(Metrics, WhiteNoiseAtTenDbPerBand) {
  // White reference plus independent white noise 10 dB lower: every band has
  // an expected SNR of 10 dB.
  const auto r = Noise(32000, 5, 0.1);
  const auto d = Noise(32000, 6, 0.1 * std::pow(10.0, -0.5));
  SampleBuffer p = r;
  for (std::size_t i = 0; i < p.size(); ++i) p.samples[i] -= d.samples[i];
  const double value = Fwsnr(r, p);
  EXPECT_NEAR(value, 10.0, 0.5);
  EXPECT_NEAR(value, oracle::Fwsnr(r.samples, p.samples), 1e-9);
}

TEST(Metrics, AgreesWithBandOracleOnSpeech) {
  const auto r = speech::SyntheticUtterance(1.5, 7);
  SampleBuffer p = r;
  const auto n = Noise(r.size(), 8, 0.02);
  for (std::size_t i = 0; i < p.size(); ++i) p.samples[i] = 0.8 * p.samples[i] + n.samples[i];
  EXPECT_NEAR(Fwsnr(r, p), oracle::Fwsnr(r.samples, p.samples), 1e-9);
}

TEST(Metrics, ScaleInvariant) {
  const auto r = speech::SyntheticUtterance(1.5, 9);
  SampleBuffer p = r;
  const auto n = Noise(r.size(), 10, 0.05);
  for (std::size_t i = 0; i < p.size(); ++i) p.samples[i] += n.samples[i];
  EXPECT_NEAR(Fwsnr(Scaled(r, 3.7), Scaled(p, 3.7)), Fwsnr(r, p), 1e-9);
}

TEST(Metrics, ErrorsOnSilentReference) {
  const SampleBuffer silent{std::vector<double>(8000, 0.0), 16000};
  EXPECT_THROW(Fwsnr(silent, Noise(8000, 1)), ConfigError);
  EXPECT_THROW(Fwsnr(SampleBuffer{{}, 16000}, SampleBuffer{{}, 16000}), ConfigError);
}

TEST(Metrics, TrimsToShorterInput) {
  const auto r = speech::SyntheticUtterance(1.0, 11);
  SampleBuffer longer = r;
  longer.samples.resize(r.size() + 4000, 0.3);
  EXPECT_DOUBLE_EQ(Fwsnr(r, longer), 35.0);
}

TEST(Metrics, Delta) {
  EXPECT_DOUBLE_EQ(metrics::Delta(5.0, 2.0), 3.0);
  EXPECT_DOUBLE_EQ(metrics::Delta(1.234, 1.234), 0.0);
  EXPECT_NEAR(metrics::Delta(4.803, 1.661), 3.142, 1e-12);
  EXPECT_THROW(metrics::Delta(std::nan(""), 1.0), ConfigError);
}

TEST(Metrics, MovingAverage) {
  EXPECT_EQ(metrics::MovingAverage({4.0, 4.0, 4.0, 4.0}, 3), (std::vector<double>{4.0, 4.0, 4.0, 4.0}));
  const auto m = metrics::MovingAverage({0, 0, 30, 0, 0}, 3);
  EXPECT_DOUBLE_EQ(m[2], 10.0);
  EXPECT_DOUBLE_EQ(m[0], 0.0);
  EXPECT_DOUBLE_EQ(m[1], 10.0);
  const auto edge = metrics::MovingAverage({6, 0, 0}, 3);
  EXPECT_DOUBLE_EQ(edge[0], 3.0);  // truncated window: (6 + 0) / 2
  EXPECT_THROW(metrics::MovingAverage({1, 2}, 2), ConfigError);
}

TEST(Metrics, SegmentalTrackShape) {
  const auto r = speech::SyntheticUtterance(20.0, 12);
  SampleBuffer p = r;
  const auto n = Noise(r.size(), 13, 0.02);
  for (std::size_t i = 0; i < p.size(); ++i) p.samples[i] += n.samples[i];
  const auto track = metrics::SegmentalTrack(r, p);
  ASSERT_EQ(track.per_segment.size(), 20u);
  ASSERT_EQ(track.smoothed.size(), 20u);
  for (std::size_t i = 0; i < 20; ++i) {
    EXPECT_DOUBLE_EQ(track.per_segment[i].time_s, static_cast<double>(i));
    EXPECT_GE(track.per_segment[i].value_db, -10.0);
    EXPECT_LE(track.per_segment[i].value_db, 35.0);
  }
  EXPECT_NEAR(track.smoothed[5].value_db,
              (track.per_segment[4].value_db + track.per_segment[5].value_db +
               track.per_segment[6].value_db) / 3.0,
              1e-12);
}

TEST(Metrics, SegmentalTrackRejectsShortSignals) {
  const auto r = Noise(8000, 14);
  EXPECT_THROW(metrics::SegmentalTrack(r, r), ConfigError);
}

TEST(Metrics, EvaluateReportsDelta) {
  const auto r = speech::SyntheticUtterance(3.0, 15);
  SampleBuffer observed = r, processed = r;
  const auto n = Noise(r.size(), 16, 0.05);
  for (std::size_t i = 0; i < r.size(); ++i) {
    observed.samples[i] += n.samples[i];
    processed.samples[i] += 0.3 * n.samples[i];
  }
  const auto rep = metrics::Evaluate(r, observed, processed);
  EXPECT_DOUBLE_EQ(rep.delta_fwsnr_db, rep.fwsnr_db - rep.observed_fwsnr_db);
  EXPECT_GT(rep.delta_fwsnr_db, 0.0);
  EXPECT_EQ(rep.per_segment.size(), 3u);
  EXPECT_FALSE(rep.pesq.has_value());
}

}  // namespace
