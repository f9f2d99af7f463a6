#include "safempc/systems.hpp"

#include <cmath>
#include <limits>

namespace safempc {

namespace {

// Below this distance the goal-distance gradient is taken as zero. It absorbs
// the cos(pi/2) ~ 6e-17 residue that makes a hovering quadrotor drift by ~1e-17 m.
constexpr double kGoalKink = 1e-12;

Eigen::Vector2d distance_gradient(const Eigen::Vector2d& delta) {
  const double d = delta.norm();
  if (d < kGoalKink) return Eigen::Vector2d::Zero();
  return delta / d;
}

}  // namespace

std::string_view to_string(SystemId id) {
  switch (id) {
    case SystemId::kDubins:
      return "dubins";
    case SystemId::kQuadrotor:
      return "quadrotor";
  }
  return "unknown";
}

std::string_view to_string(Wall wall) {
  switch (wall) {
    case Wall::kCeiling:
      return "ceiling";
    case Wall::kFloor:
      return "floor";
    case Wall::kRight:
      return "right";
    case Wall::kLeft:
      return "left";
  }
  return "unknown";
}

void DubinsParams::validate() const {
  if (!(speed > 0.0)) throw ConfigError("dubins: speed must be positive");
  if (!(max_turn_rate > 0.0)) throw ConfigError("dubins: max_turn_rate must be positive");
  if (obstacles.empty()) throw ConfigError("dubins: at least one obstacle is required");
  for (const auto& o : obstacles) {
    if (!(o.radius > 0.0)) throw ConfigError("dubins: obstacle radius must be positive");
  }
}

void QuadrotorParams::validate() const {
  if (!(mass > 0.0) || !(inertia > 0.0)) throw ConfigError("quadrotor: mass and inertia must be positive");
  if (!(gravity >= 0.0)) throw ConfigError("quadrotor: gravity must be non-negative");
  if (!(half_width > 0.0)) throw ConfigError("quadrotor: half_width must be positive");
  if (thrust.lo > thrust.hi || torque.lo > torque.hi) throw ConfigError("quadrotor: empty control bounds");
}

// ---------------------------------------------------------------------------
// Dubins car

DubinsCar::DubinsCar(DubinsParams params) : params_(std::move(params)) {
  params_.validate();
  bounds_ = {Interval{-params_.max_turn_rate, params_.max_turn_rate}};
}

StateVec DubinsCar::drift(const StateVec& x) const {
  StateVec f(3);
  f << params_.speed * std::cos(x[2]), params_.speed * std::sin(x[2]), 0.0;
  return f;
}

ActuationMat DubinsCar::actuation(const StateVec&) const {
  ActuationMat g = ActuationMat::Zero(3, 1);
  g(2, 0) = 1.0;
  return g;
}

StateMat DubinsCar::dynamics_jacobian(const StateVec& x, const ControlVec&) const {
  StateMat a = StateMat::Zero(3, 3);
  a(0, 2) = -params_.speed * std::sin(x[2]);
  a(1, 2) = params_.speed * std::cos(x[2]);
  return a;
}

double DubinsCar::constraint(const StateVec& x) const { return dubins_constraint_l(x, params_); }

StateVec DubinsCar::constraint_gradient(const StateVec& x) const {
  double best = std::numeric_limits<double>::infinity();
  Eigen::Vector2d grad = Eigen::Vector2d::Zero();
  for (const auto& o : params_.obstacles) {
    const Eigen::Vector2d delta(x[0] - o.x, x[1] - o.y);
    const double value = delta.norm() - o.radius;
    if (value < best) {
      best = value;
      grad = distance_gradient(delta);
    }
  }
  StateVec out = StateVec::Zero(3);
  out.head<2>() = grad;
  return out;
}

double DubinsCar::goal_distance(const StateVec& x) const {
  return running_cost(position(x), params_.goal);
}

StateVec DubinsCar::goal_distance_gradient(const StateVec& x) const {
  StateVec out = StateVec::Zero(3);
  out.head<2>() = distance_gradient(position(x) - params_.goal);
  return out;
}

// ---------------------------------------------------------------------------
// Planar quadrotor

PlanarQuadrotor::PlanarQuadrotor(QuadrotorParams params) : params_(std::move(params)) {
  params_.validate();
  bounds_ = {params_.thrust, params_.torque};
}

StateVec PlanarQuadrotor::drift(const StateVec& x) const {
  StateVec f(6);
  f << x[3], x[4], x[5], 0.0, -params_.gravity, 0.0;
  return f;
}

ActuationMat PlanarQuadrotor::actuation(const StateVec& x) const {
  ActuationMat g = ActuationMat::Zero(6, 2);
  g(3, 0) = std::cos(x[2]) / params_.mass;
  g(4, 0) = std::sin(x[2]) / params_.mass;
  g(5, 1) = 1.0 / params_.inertia;
  return g;
}

StateMat PlanarQuadrotor::dynamics_jacobian(const StateVec& x, const ControlVec& u) const {
  StateMat a = StateMat::Zero(6, 6);
  a(0, 3) = 1.0;
  a(1, 4) = 1.0;
  a(2, 5) = 1.0;
  a(3, 2) = -u[0] * std::sin(x[2]) / params_.mass;
  a(4, 2) = u[0] * std::cos(x[2]) / params_.mass;
  return a;
}

double PlanarQuadrotor::constraint(const StateVec& x) const { return quad_constraint_l(x, params_); }

StateVec PlanarQuadrotor::constraint_gradient(const StateVec& x) const {
  const auto d = quad_wall_distances(x, params_);
  int active = 0;
  for (int i = 1; i < 4; ++i) {
    if (d[i] < d[active]) active = i;
  }
  StateVec out = StateVec::Zero(6);
  switch (static_cast<Wall>(active)) {
    case Wall::kCeiling:
      out[1] = -1.0;
      break;
    case Wall::kFloor:
      out[1] = 1.0;
      break;
    case Wall::kRight:
      out[0] = -1.0;
      break;
    case Wall::kLeft:
      out[0] = 1.0;
      break;
  }
  return out;
}

double PlanarQuadrotor::goal_distance(const StateVec& x) const {
  return running_cost(position(x), params_.goal);
}

StateVec PlanarQuadrotor::goal_distance_gradient(const StateVec& x) const {
  StateVec out = StateVec::Zero(6);
  out.head<2>() = distance_gradient(position(x) - params_.goal);
  return out;
}

ControlVec PlanarQuadrotor::neutral_control() const {
  ControlVec u(2);
  u << params_.mass * params_.gravity, 0.0;
  return u;
}

// ---------------------------------------------------------------------------

DubinsCar dubins_model(const DubinsParams& p) { return DubinsCar(p); }

PlanarQuadrotor quadrotor_model(const QuadrotorParams& p) { return PlanarQuadrotor(p); }

double dubins_constraint_l(const StateVec& x, const DubinsParams& p) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& o : p.obstacles) {
    const Eigen::Vector2d delta(x[0] - o.x, x[1] - o.y);
    best = std::min(best, delta.norm() - o.radius);
  }
  return best;
}

std::array<double, 4> quad_wall_distances(const StateVec& x, const QuadrotorParams& p) {
  const double w = p.half_width;
  return {w - x[1], w + x[1], w - x[0], w + x[0]};
}

double quad_constraint_l(const StateVec& x, const QuadrotorParams& p) {
  const auto d = quad_wall_distances(x, p);
  return std::min(std::min(d[0], d[1]), std::min(d[2], d[3]));
}

double running_cost(const Eigen::Vector2d& position, const Eigen::Vector2d& goal) {
  return (position - goal).norm();
}

}  // namespace safempc
