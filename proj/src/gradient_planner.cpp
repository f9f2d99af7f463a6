#include "safempc/gradient_planner.hpp"

#include <chrono>

namespace safempc {

double cost_and_gradient(const StateVec& x0, const Eigen::Ref<const Eigen::MatrixXd>& useq,
                         const HorizonProblem& problem, Eigen::Ref<Eigen::MatrixXd> grad) {
  const BenchmarkSystem& sys = *problem.system;
  const PenaltyParams& pen = problem.cost.penalty;
  const double w = problem.cost.control_weight;
  const double dt = problem.dt;
  const Eigen::Index h = useq.cols();
  const int n = sys.state_dim();
  if (grad.rows() != useq.rows() || grad.cols() != h) {
    throw ConfigError("cost_and_gradient: gradient buffer has the wrong shape");
  }

  // Derivative of the stage terms that depend on x: r(x) + pen(l(x)).
  auto stage = [&](const StateVec& x, StateVec& dx) {
    const double l = sys.constraint(x);
    double value = sys.goal_distance(x);
    dx = sys.goal_distance_gradient(x);
    // Hinge: subgradient 0 exactly at l == delta.
    if (l < pen.delta) {
      value += soft_penalty(l, pen);
      dx -= pen.lambda * sys.constraint_gradient(x);
    }
    return value;
  };

  const ControlVec neutral = sys.neutral_control();
  Eigen::MatrixXd states(n, h + 1);
  states.col(0) = x0;
  StateVec x = x0;
  for (Eigen::Index k = 0; k < h; ++k) {
    x += (sys.drift(x) + sys.actuation(x) * useq.col(k)) * dt;
    if (!x.allFinite()) throw NumericalError("cost_and_gradient: non-finite rollout", static_cast<int>(k));
    states.col(k + 1) = x;
  }

  StateVec dstage(n);
  StateVec costate(n);
  double total = stage(states.col(h), costate);
  for (Eigen::Index k = h - 1; k >= 0; --k) {
    const StateVec xk = states.col(k);
    const ControlVec uk = useq.col(k);
    // dC/du_k = (g(x_k) dt)^T lambda_{k+1}
    grad.col(k) = (sys.actuation(xk).transpose() * costate) * dt;
    if (w != 0.0) {
      grad.col(k) += 2.0 * w * (uk - neutral);
      total += w * (uk - neutral).squaredNorm();
    }
    total += stage(xk, dstage);
    // lambda_k = (I + A_k dt)^T lambda_{k+1} + grad stage_k
    costate += sys.dynamics_jacobian(xk, uk).transpose() * costate * dt;
    costate += dstage;
  }
  return total;
}

ControlSequence shift_warm_start(const ControlSequence& prev) {
  ControlSequence next(prev.rows(), prev.cols());
  if (prev.cols() == 0) return next;
  next.leftCols(prev.cols() - 1) = prev.rightCols(prev.cols() - 1);
  next.col(prev.cols() - 1) = prev.col(prev.cols() - 1);
  return next;
}

GradientPlanner::GradientPlanner(HorizonProblem problem, int horizon, LbfgsOptions options)
    : problem_(problem), options_(options) {
  if (problem_.system == nullptr) throw ConfigError("planner: missing system");
  if (horizon < 1) throw ConfigError("planner: horizon must be >= 1");
  options_.validate();
  state_.horizon = horizon;
  state_.dt = problem_.dt;
}

ControlSequence GradientPlanner::warm_start() const {
  if (state_.previous_solution.size() != 0) return state_.previous_solution;
  const ControlVec neutral = problem_.system->neutral_control();
  return neutral.replicate(1, state_.horizon);
}

void GradientPlanner::set_warm_start(ControlSequence seq) {
  if (seq.cols() != state_.horizon || seq.rows() != problem_.system->control_dim()) {
    throw ConfigError("planner: warm start has the wrong shape");
  }
  state_.previous_solution = std::move(seq);
}

PlanResult GradientPlanner::plan(const StateVec& x_t) {
  if (!x_t.allFinite()) throw NumericalError("planner: non-finite state");
  const int m = problem_.system->control_dim();
  const int h = state_.horizon;
  const ControlSequence start = warm_start();

  const DifferentiableFunction fn = [&](const Eigen::VectorXd& u, Eigen::VectorXd& g) {
    Eigen::Map<const Eigen::MatrixXd> useq(u.data(), m, h);
    Eigen::Map<Eigen::MatrixXd> grad(g.data(), m, h);
    return cost_and_gradient(x_t, useq, problem_, grad);
  };

  const auto t0 = std::chrono::steady_clock::now();
  const Eigen::VectorXd x0 = Eigen::Map<const Eigen::VectorXd>(start.data(), start.size());
  OptimResult opt = minimize(fn, x0, options_);
  const auto t1 = std::chrono::steady_clock::now();

  PlanResult result;
  result.solve_time = std::chrono::duration<double>(t1 - t0).count();
  result.termination = opt.termination;
  result.iters = opt.iters;

  ControlSequence seq = Eigen::Map<const Eigen::MatrixXd>(opt.x_star.data(), m, h);
  const auto& bounds = problem_.system->control_bounds();
  for (int k = 0; k < h; ++k) seq.col(k) = clamp(seq.col(k), bounds);

  // Clamping can undo part of the descent; never hand back something worse
  // than the (already feasible) warm start.
  result.objective = objective(x_t, seq, problem_);
  const double start_objective = objective(x_t, start, problem_);
  if (start_objective < result.objective) {
    seq = start;
    result.objective = start_objective;
  }

  result.u_nominal = seq.col(0);
  result.sequence = seq;
  state_.previous_solution = shift_warm_start(seq);
  return result;
}

}  // namespace safempc
