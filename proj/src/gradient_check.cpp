#include "safempc/gradient_check.hpp"

#include "safempc/gradient_planner.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace safempc {

Eigen::MatrixXd finite_difference_gradient(const StateVec& x0, const Eigen::MatrixXd& useq,
                                           const HorizonProblem& problem, double epsilon) {
  Eigen::MatrixXd grad(useq.rows(), useq.cols());
  Eigen::MatrixXd probe = useq;
  for (Eigen::Index i = 0; i < useq.size(); ++i) {
    const double saved = probe.data()[i];
    probe.data()[i] = saved + epsilon;
    const double up = objective(x0, probe, problem);
    probe.data()[i] = saved - epsilon;
    const double down = objective(x0, probe, problem);
    probe.data()[i] = saved;
    grad.data()[i] = (up - down) / (2.0 * epsilon);
  }
  return grad;
}

namespace {

// Smallest gap between the active and the runner-up branch of the min in l.
double branch_gap(const Scenario& s, const StateVec& x) {
  std::vector<double> values;
  if (s.system == SystemId::kDubins) {
    for (const auto& o : s.dubins.obstacles) {
      values.push_back(std::hypot(x[0] - o.x, x[1] - o.y) - o.radius);
    }
  } else {
    const auto d = quad_wall_distances(x, s.quadrotor);
    values.assign(d.begin(), d.end());
  }
  if (values.size() < 2) return std::numeric_limits<double>::infinity();
  std::sort(values.begin(), values.end());
  return values[1] - values[0];
}

bool near_kink(const Scenario& s, const BenchmarkSystem& sys, const StateVec& x0, const Eigen::MatrixXd& useq,
               double margin) {
  const Trajectory traj = rollout(x0, useq, s.dt, sys);
  for (Eigen::Index k = 0; k < traj.states.cols(); ++k) {
    const StateVec x = traj.states.col(k);
    if (std::abs(sys.constraint(x) - s.cost.penalty.delta) <= margin) return true;
    if (branch_gap(s, x) <= margin) return true;
    if (sys.goal_distance(x) <= margin) return true;
    if (s.system == SystemId::kDubins) {
      for (const auto& o : s.dubins.obstacles) {
        if (std::hypot(x[0] - o.x, x[1] - o.y) <= margin) return true;
      }
    }
  }
  return false;
}

}  // namespace

GradientCheckReport check_gradients(const Scenario& scenario, const GradientCheckOptions& opts) {
  scenario.validate();
  const auto system = scenario.make_system();
  const BenchmarkSystem& sys = *system;
  const HorizonProblem problem{&sys, scenario.dt, scenario.cost};
  const int m = sys.control_dim();
  const int h = scenario.plan_horizon;
  const auto& bounds = sys.control_bounds();

  std::mt19937_64 rng(opts.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  GradientCheckReport report;
  double sum = 0.0;
  std::uint64_t draw = 0;
  while (report.points < opts.points) {
    const StateVec x0 = sample_initial_state(scenario, sys, opts.seed * 7919 + draw++);
    Eigen::MatrixXd useq(m, h);
    for (int k = 0; k < h; ++k) {
      for (int j = 0; j < m; ++j) useq(j, k) = bounds[j].lo + (bounds[j].hi - bounds[j].lo) * unit(rng);
    }
    if (near_kink(scenario, sys, x0, useq, opts.kink_margin)) {
      ++report.rejected_draws;
      if (report.rejected_draws > 1000 * opts.points) {
        throw NumericalError("check_gradients: could not find draws away from the cost kinks");
      }
      continue;
    }
    Eigen::MatrixXd adjoint(m, h);
    cost_and_gradient(x0, useq, problem, adjoint);
    const Eigen::MatrixXd fd = finite_difference_gradient(x0, useq, problem, opts.epsilon);
    const double rel = (adjoint - fd).norm() / std::max(fd.norm(), 1e-300);
    report.max_relative_error = std::max(report.max_relative_error, rel);
    sum += rel;
    ++report.points;
  }
  if (report.points > 0) report.mean_relative_error = sum / report.points;
  return report;
}

}  // namespace safempc
