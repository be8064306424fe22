#ifndef KPFCP_COMPLEXITY_HPP
#define KPFCP_COMPLEXITY_HPP

#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "kpfcp/common.hpp"
#include "kpfcp/dereverb.hpp"
#include "kpfcp/mac_counter.hpp"

namespace kpfcp::complexity {

/// Cost of the direct-path network per TF unit, reported for context only.
inline constexpr std::uint64_t kDnnMacsPerTfUnit = 2100;

/// MACs per TF unit of FCP (online): 16K^2 + 20K + 16.
inline std::uint64_t MacFcp(std::int64_t k) {
  Require(k >= 1, "mac_fcp: k must be >= 1");
  const auto K = static_cast<std::uint64_t>(k);
  return 16 * K * K + 20 * K + 16;
}

/// MACs per TF unit of KP-FCP:
/// 16P^2(K1^2 + K2^2) + 8P K1 K2 + 16P K1 + 20P K2 + 24.
inline std::uint64_t MacKpfcp(std::int64_t p, std::int64_t k1, std::int64_t k2) {
  Require(p >= 1 && k1 >= 1 && k2 >= 1, "mac_kpfcp: p, k1 and k2 must be >= 1");
  const auto P = static_cast<std::uint64_t>(p);
  const auto A = static_cast<std::uint64_t>(k1);
  const auto B = static_cast<std::uint64_t>(k2);
  return 16 * P * P * (A * A + B * B) + 8 * P * A * B + 16 * P * A + 20 * P * B + 24;
}

/// Smallest P with MacKpfcp(P, k1, k2) >= MacFcp(k1 * k2), searching
/// P = 1 .. min(k1, k2) + 1. nullopt when parity is never reached.
inline std::optional<int> Crossover(int k1, int k2) {
  Require(k1 >= 1 && k2 >= 1, "crossover: k1 and k2 must be >= 1");
  const std::uint64_t fcp = MacFcp(static_cast<std::int64_t>(k1) * k2);
  for (int p = 1; p <= std::min(k1, k2) + 1; ++p) {
    if (MacKpfcp(p, k1, k2) >= fcp) return p;
  }
  return std::nullopt;
}

struct SweepRow {
  int p;
  std::uint64_t macs_kpfcp;
  std::uint64_t macs_fcp;
};

inline std::vector<SweepRow> Sweep(int k1, int k2, int p_min, int p_max) {
  std::vector<SweepRow> rows;
  const std::uint64_t fcp = MacFcp(static_cast<std::int64_t>(k1) * k2);
  for (int p = p_min; p <= p_max; ++p) rows.push_back({p, MacKpfcp(p, k1, k2), fcp});
  return rows;
}

inline std::string SweepCsv(const std::vector<SweepRow>& rows) {
  std::ostringstream os;
  os << "P,macs_kpfcp,macs_fcp\n";
  for (const auto& r : rows) os << r.p << ',' << r.macs_kpfcp << ',' << r.macs_fcp << '\n';
  return os.str();
}

inline std::uint64_t ModelMacs(const AlgorithmSpec& spec) {
  if (spec.algorithm == Algorithm::kFcp) return MacFcp(spec.fcp.k);
  return MacKpfcp(spec.kpfcp.p, spec.kpfcp.k1, spec.kpfcp.k2);
}

struct MeasureOptions {
  bool instrument_macs = false;
  ProcessOptions process;
};

struct Measurement {
  TFGrid output;
  std::uint64_t total_macs = 0;
  double macs_per_tf_unit = 0.0;
};

/// Runs the algorithm with the counting policy and normalizes by TF units.
inline Measurement MeasureMacs(const AlgorithmSpec& spec, const TFGrid& observed,
                               const TFGrid& s_nn, const MeasureOptions& opt) {
  if (!opt.instrument_macs) {
    throw ConfigError("MAC measurement requires instrumentation (--instrument-macs)");
  }
  MacCounter counter;
  Measurement m;
  m.output = Dereverberate(spec, observed, s_nn, opt.process, &counter);
  m.total_macs = counter.count;
  const auto units = static_cast<double>(observed.frames() * observed.bins());
  m.macs_per_tf_unit = units > 0 ? static_cast<double>(counter.count) / units : 0.0;
  return m;
}

}  // namespace kpfcp::complexity

#endif  // KPFCP_COMPLEXITY_HPP
