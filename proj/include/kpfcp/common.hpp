#ifndef KPFCP_COMMON_HPP
#define KPFCP_COMMON_HPP

#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace kpfcp {

using cplx = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;

/// Invalid parameters, malformed inputs or unsupported files.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when an adaptive filter state stops being finite.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, std::ptrdiff_t frame = -1,
                 std::ptrdiff_t bin = -1)
      : std::runtime_error(Format(what, frame, bin)), frame_(frame), bin_(bin) {}

  std::ptrdiff_t frame() const noexcept { return frame_; }
  std::ptrdiff_t bin() const noexcept { return bin_; }

 private:
  static std::string Format(const std::string& what, std::ptrdiff_t frame,
                            std::ptrdiff_t bin) {
    std::string msg = what;
    if (frame >= 0 || bin >= 0) {
      msg += " (frame " + std::to_string(frame) + ", bin " +
             std::to_string(bin) + ")";
    }
    return msg;
  }

  std::ptrdiff_t frame_;
  std::ptrdiff_t bin_;
};

inline void Require(bool condition, const std::string& message) {
  if (!condition) throw ConfigError(message);
}

inline bool IsFinite(cplx v) {
  return std::isfinite(v.real()) && std::isfinite(v.imag());
}

}  // namespace kpfcp

#endif  // KPFCP_COMMON_HPP
