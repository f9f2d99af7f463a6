#pragma once

#include "safempc/dynamics.hpp"

#include <array>
#include <string_view>
#include <vector>

namespace safempc {

enum class SystemId { kDubins, kQuadrotor };

std::string_view to_string(SystemId id);

struct Obstacle {
  double x = 0.0;
  double y = 0.0;
  double radius = 0.1;
};

struct DubinsParams {
  double speed = 1.0;       // m/s, fixed forward velocity
  Eigen::Vector2d goal{0.5, 0.0};
  std::vector<Obstacle> obstacles;
  double max_turn_rate = 2.0;  // rad/s

  void validate() const;
};

struct QuadrotorParams {
  double mass = 1.0;
  double inertia = 1.0;
  double gravity = 9.81;
  Eigen::Vector2d goal{0.0, 0.0};
  double half_width = 0.9;
  Interval thrust{0.0, 2.0 * 9.81};
  Interval torque{-4.0, 4.0};

  void validate() const;
};

// Walls of the quadrotor room, in the fixed order used for tie-breaking.
enum class Wall : int { kCeiling = 0, kFloor = 1, kRight = 2, kLeft = 3 };

std::string_view to_string(Wall wall);

// A dynamics model together with its task: the safety function l (safe iff l > 0)
// and the goal distance used as both running and terminal cost.
class BenchmarkSystem : public SystemModel {
 public:
  virtual SystemId id() const = 0;

  virtual double constraint(const StateVec& x) const = 0;
  // Gradient of the active branch of the min; ties resolve to the lowest index.
  virtual StateVec constraint_gradient(const StateVec& x) const = 0;

  virtual double goal_distance(const StateVec& x) const = 0;
  // Zero at the goal itself (subgradient choice at the kink).
  virtual StateVec goal_distance_gradient(const StateVec& x) const = 0;

  // Planar position used for plotting and cost.
  virtual Eigen::Vector2d position(const StateVec& x) const = 0;

  // Control that holds the vehicle in place (zeros for Dubins, hover thrust for the quadrotor).
  virtual ControlVec neutral_control() const = 0;
};

class DubinsCar final : public BenchmarkSystem {
 public:
  explicit DubinsCar(DubinsParams params);

  int state_dim() const override { return 3; }
  int control_dim() const override { return 1; }
  StateVec drift(const StateVec& x) const override;
  ActuationMat actuation(const StateVec& x) const override;
  StateMat dynamics_jacobian(const StateVec& x, const ControlVec& u) const override;
  const ControlBounds& control_bounds() const override { return bounds_; }

  SystemId id() const override { return SystemId::kDubins; }
  double constraint(const StateVec& x) const override;
  StateVec constraint_gradient(const StateVec& x) const override;
  double goal_distance(const StateVec& x) const override;
  StateVec goal_distance_gradient(const StateVec& x) const override;
  Eigen::Vector2d position(const StateVec& x) const override { return {x[0], x[1]}; }
  ControlVec neutral_control() const override { return ControlVec::Zero(1); }

  const DubinsParams& params() const { return params_; }

 private:
  DubinsParams params_;
  ControlBounds bounds_;
};

// State (x, z, theta, xdot, zdot, thetadot), control (F, M).
class PlanarQuadrotor final : public BenchmarkSystem {
 public:
  explicit PlanarQuadrotor(QuadrotorParams params);

  int state_dim() const override { return 6; }
  int control_dim() const override { return 2; }
  StateVec drift(const StateVec& x) const override;
  ActuationMat actuation(const StateVec& x) const override;
  StateMat dynamics_jacobian(const StateVec& x, const ControlVec& u) const override;
  const ControlBounds& control_bounds() const override { return bounds_; }

  SystemId id() const override { return SystemId::kQuadrotor; }
  double constraint(const StateVec& x) const override;
  StateVec constraint_gradient(const StateVec& x) const override;
  double goal_distance(const StateVec& x) const override;
  StateVec goal_distance_gradient(const StateVec& x) const override;
  Eigen::Vector2d position(const StateVec& x) const override { return {x[0], x[1]}; }
  ControlVec neutral_control() const override;

  const QuadrotorParams& params() const { return params_; }

 private:
  QuadrotorParams params_;
  ControlBounds bounds_;
};

DubinsCar dubins_model(const DubinsParams& p);
PlanarQuadrotor quadrotor_model(const QuadrotorParams& p);

// min over obstacles of (distance to centre - radius)
double dubins_constraint_l(const StateVec& x, const DubinsParams& p);

// Distances to ceiling, floor, right and left walls, in Wall order.
std::array<double, 4> quad_wall_distances(const StateVec& x, const QuadrotorParams& p);
double quad_constraint_l(const StateVec& x, const QuadrotorParams& p);

// Euclidean distance of the planar position to the goal.
double running_cost(const Eigen::Vector2d& position, const Eigen::Vector2d& goal);

}  // namespace safempc
