#ifndef KPFCP_MAC_COUNTER_HPP
#define KPFCP_MAC_COUNTER_HPP

#include <cstdint>

namespace kpfcp {

// Counting convention: real multiply-accumulates. A complex x complex product
// counts 4, a real x complex product counts 2, a real x real product 1.
inline constexpr std::uint64_t kComplexMac = 4;
inline constexpr std::uint64_t kRealComplexMac = 2;

/// Counter policy that compiles away.
struct NoMacCount {
  static constexpr bool kEnabled = false;
  constexpr void Add(std::uint64_t) noexcept {}
  constexpr void Merge(const NoMacCount&) noexcept {}
};

struct MacCounter {
  static constexpr bool kEnabled = true;
  std::uint64_t count = 0;
  void Add(std::uint64_t n) noexcept { count += n; }
  void Merge(const MacCounter& other) noexcept { count += other.count; }
};

}  // namespace kpfcp

#endif  // KPFCP_MAC_COUNTER_HPP
