#include "safempc/dynamics.hpp"

#include <cmath>
#include <string>

namespace safempc {

namespace {

void check_dims(const StateVec& x, const ControlVec& u, const SystemModel& sys) {
  if (x.size() != sys.state_dim() || u.size() != sys.control_dim()) {
    throw ConfigError("dimension mismatch: state " + std::to_string(x.size()) + "/" +
                      std::to_string(sys.state_dim()) + ", control " + std::to_string(u.size()) +
                      "/" + std::to_string(sys.control_dim()));
  }
}

}  // namespace

StateVec euler_step(const StateVec& x, const ControlVec& u, double dt, const SystemModel& sys) {
  if (!(dt > 0.0)) throw ConfigError("euler_step: dt must be positive");
  check_dims(x, u, sys);
  StateVec next = x + (sys.drift(x) + sys.actuation(x) * u) * dt;
  if (!next.allFinite()) throw NumericalError("euler_step produced a non-finite state");
  return next;
}

Trajectory rollout(const StateVec& x0, const ControlSequence& useq, double dt,
                   const SystemModel& sys) {
  if (useq.cols() == 0) throw ConfigError("rollout: empty control sequence");
  if (!x0.allFinite()) throw NumericalError("rollout: non-finite initial state", 0);
  Trajectory traj;
  traj.dt = dt;
  traj.controls = useq;
  traj.states.resize(sys.state_dim(), useq.cols() + 1);
  traj.states.col(0) = x0;
  StateVec x = x0;
  for (Eigen::Index k = 0; k < useq.cols(); ++k) {
    try {
      x = euler_step(x, useq.col(k), dt, sys);
    } catch (const NumericalError&) {
      throw NumericalError("rollout: non-finite state", static_cast<int>(k));
    }
    traj.states.col(k + 1) = x;
  }
  return traj;
}

}  // namespace safempc
