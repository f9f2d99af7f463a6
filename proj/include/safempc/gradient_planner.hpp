#pragma once

#include "safempc/cost_model.hpp"
#include "safempc/lbfgs.hpp"

namespace safempc {

// Objective value and its exact gradient with respect to every control entry,
// via one forward Euler rollout and one backward co-state sweep.
// `grad` must have the same shape as `useq`.
double cost_and_gradient(const StateVec& x0, const Eigen::Ref<const Eigen::MatrixXd>& useq,
                         const HorizonProblem& problem, Eigen::Ref<Eigen::MatrixXd> grad);

// Receding-horizon warm start: [a, b, c] -> [b, c, c].
ControlSequence shift_warm_start(const ControlSequence& prev);

struct PlanResult {
  ControlVec u_nominal;
  ControlSequence sequence;
  double solve_time = 0.0;  // seconds, optimizer call only
  Termination termination = Termination::kMaxIters;
  int iters = 0;
  double objective = 0.0;
};

struct PlannerState {
  ControlSequence previous_solution;  // empty until the first solve
  int horizon = 20;
  double dt = 0.05;
};

class GradientPlanner {
 public:
  GradientPlanner(HorizonProblem problem, int horizon, LbfgsOptions options);

  PlanResult plan(const StateVec& x_t);

  // Sequence the next solve starts from.
  ControlSequence warm_start() const;
  void set_warm_start(ControlSequence seq);

  const PlannerState& state() const { return state_; }

 private:
  HorizonProblem problem_;
  LbfgsOptions options_;
  PlannerState state_;
};

}  // namespace safempc
