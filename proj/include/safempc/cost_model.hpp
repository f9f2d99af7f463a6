#pragma once

#include "safempc/systems.hpp"

namespace safempc {

struct PenaltyParams {
  double lambda = 100.0;  // trade-off weight
  double delta = 0.05;    // inflation margin, units of l

  void validate() const;
};

struct CostParams {
  PenaltyParams penalty;
  // Optional weight on w |u_k - u_neutral|^2 per stage, where u_neutral is the
  // system's hold-in-place control (zero turn rate, hover thrust). Off by default.
  double control_weight = 0.0;
};

// Everything needed to score a control sequence from a given state.
struct HorizonProblem {
  const BenchmarkSystem* system = nullptr;
  double dt = 0.05;
  CostParams cost;
};

// lambda * max(0, delta - l)
inline double soft_penalty(double l_value, const PenaltyParams& p) {
  return p.lambda * std::max(0.0, -l_value + p.delta);
}

// Soft-constrained horizon cost
//   sum_{k<h} [ r(x_k) + pen(l(x_k)) + w |u_k - u_neutral|^2 ] + phi(x_h) + pen(l(x_h))
// with r = phi = goal distance. Throws NumericalError on a non-finite rollout.
double objective(const StateVec& x0, const Eigen::Ref<const Eigen::MatrixXd>& useq,
                 const HorizonProblem& problem);

}  // namespace safempc
