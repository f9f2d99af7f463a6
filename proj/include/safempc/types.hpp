#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace safempc {

// Upper limits on the inline storage of state/control vectors. Dimensions are
// runtime properties of a SystemModel; these only bound them so the hot loops
// never touch the heap.
inline constexpr int kMaxStateDim = 8;
inline constexpr int kMaxControlDim = 4;

using StateVec = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxStateDim, 1>;
using ControlVec = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxControlDim, 1>;
using StateMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor,
                               kMaxStateDim, kMaxStateDim>;
using ActuationMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor,
                                   kMaxStateDim, kMaxControlDim>;

// Horizon-length control sequence: column k is the control applied at step k.
// Column-major storage makes data() the flat decision vector [u_0; u_1; ...].
using ControlSequence = Eigen::MatrixXd;

struct Interval {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
};

using ControlBounds = std::vector<Interval>;

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, int step = -1)
      : std::runtime_error(step >= 0 ? what + " (step " + std::to_string(step) + ")" : what),
        step_(step) {}

  int step() const { return step_; }

 private:
  int step_;
};

inline ControlVec clamp(const ControlVec& u, const ControlBounds& bounds) {
  ControlVec out = u;
  for (Eigen::Index i = 0; i < out.size() && i < static_cast<Eigen::Index>(bounds.size()); ++i) {
    out[i] = std::min(std::max(out[i], bounds[i].lo), bounds[i].hi);
  }
  return out;
}

}  // namespace safempc
