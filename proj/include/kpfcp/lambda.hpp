#ifndef KPFCP_LAMBDA_HPP
#define KPFCP_LAMBDA_HPP

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "kpfcp/common.hpp"

namespace kpfcp {

inline constexpr double kDefaultLambdaFloor = 1e-10;

/// Per-TF-unit cost weight |y|^2 + sigma * (running max |y|)^2, floored.
/// The running maximum covers every unit observed so far and never decreases.
class LambdaTracker {
 public:
  explicit LambdaTracker(double sigma = 0.01, double floor = kDefaultLambdaFloor)
      : sigma_(sigma), floor_(floor) {
    Require(sigma >= 0.0 && std::isfinite(sigma), "sigma must be non-negative");
    Require(floor > 0.0, "lambda_floor must be positive");
  }

  void Observe(cplx y) { running_max_mag_ = std::max(running_max_mag_, std::abs(y)); }

  double Weight(cplx y) const {
    return std::max(std::norm(y) + sigma_ * running_max_mag_ * running_max_mag_, floor_);
  }

  double Update(cplx y) {
    Observe(y);
    return Weight(y);
  }

  double running_max_mag() const noexcept { return running_max_mag_; }
  double sigma() const noexcept { return sigma_; }
  double floor() const noexcept { return floor_; }

 private:
  double sigma_;
  double floor_;
  double running_max_mag_ = 0.0;
};

/// Frame-level pre-pass: every bin of frame t is observed before any weight of
/// frame t is taken, so the weights of a frame do not depend on bin order.
template <class RowIn, class RowOut>
void WeightFrame(LambdaTracker& tracker, const RowIn& y_row, RowOut&& out) {
  for (Eigen::Index f = 0; f < y_row.size(); ++f) tracker.Observe(y_row(f));
  for (Eigen::Index f = 0; f < y_row.size(); ++f) out(f) = tracker.Weight(y_row(f));
}

inline Eigen::MatrixXd LambdaGrid(const CMatrix& observed, double sigma, double floor) {
  LambdaTracker tracker(sigma, floor);
  Eigen::MatrixXd lambda(observed.rows(), observed.cols());
  for (Eigen::Index t = 0; t < observed.rows(); ++t) {
    WeightFrame(tracker, observed.row(t), lambda.row(t));
  }
  return lambda;
}

}  // namespace kpfcp

#endif  // KPFCP_LAMBDA_HPP
