#pragma once

#include "safempc/scenario.hpp"

#include <cstdint>

namespace safempc {

struct GradientCheckOptions {
  int points = 100;
  double epsilon = 1e-6;       // central-difference step
  double kink_margin = 1e-3;   // distance kept from hinge, min-switch and goal kinks
  std::uint64_t seed = 0;
};

struct GradientCheckReport {
  int points = 0;
  int rejected_draws = 0;  // draws discarded for passing too close to a kink
  double max_relative_error = 0.0;
  double mean_relative_error = 0.0;
};

// Central differences of `objective` (forward rollouts only).
Eigen::MatrixXd finite_difference_gradient(const StateVec& x0, const Eigen::MatrixXd& useq,
                                           const HorizonProblem& problem, double epsilon);

// Compares the adjoint gradient with central differences at random
// (initial state, control sequence) draws. Relative error is
// |g_adjoint - g_fd| / |g_fd| in the Euclidean norm.
GradientCheckReport check_gradients(const Scenario& scenario, const GradientCheckOptions& opts);

}  // namespace safempc
