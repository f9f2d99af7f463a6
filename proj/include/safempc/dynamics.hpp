#pragma once

#include "safempc/types.hpp"

#include <vector>

namespace safempc {

// Control-affine model xdot = f(x) + g(x) u.
class SystemModel {
 public:
  virtual ~SystemModel() = default;

  virtual int state_dim() const = 0;
  virtual int control_dim() const = 0;

  // f(x)
  virtual StateVec drift(const StateVec& x) const = 0;
  // g(x), state_dim x control_dim
  virtual ActuationMat actuation(const StateVec& x) const = 0;
  // d/dx [f(x) + g(x) u] at fixed u
  virtual StateMat dynamics_jacobian(const StateVec& x, const ControlVec& u) const = 0;

  virtual const ControlBounds& control_bounds() const = 0;
};

struct StepDiagnostics {
  std::vector<double> h_values;
  double filter_delta = 0.0;
  bool filter_infeasible = false;
};

struct Trajectory {
  Eigen::MatrixXd states;    // state_dim x (K+1)
  Eigen::MatrixXd controls;  // control_dim x K
  double dt = 0.0;
  std::vector<double> l_values;           // one per state
  std::vector<StepDiagnostics> diagnostics;  // one per control

  int steps() const { return static_cast<int>(controls.cols()); }
  StateVec state(int k) const { return states.col(k); }
};

// One forward-Euler step x + (f(x) + g(x) u) dt.
StateVec euler_step(const StateVec& x, const ControlVec& u, double dt, const SystemModel& sys);

// Open-loop Euler rollout. Only states/controls/dt are filled; diagnostics stay empty.
Trajectory rollout(const StateVec& x0, const ControlSequence& useq, double dt,
                   const SystemModel& sys);

}  // namespace safempc
