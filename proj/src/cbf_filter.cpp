#include "safempc/cbf_filter.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace safempc {

void CbfParams::validate() const {
  if (!(alpha > 0.0)) throw ConfigError("cbf: alpha must be positive");
  if (!(gamma > 0.0)) throw ConfigError("cbf: gamma must be positive");
}

LinearCbfConstraint dubins_hocbf_constraint(const StateVec& x, const Obstacle& obstacle,
                                            const CbfParams& p, double speed, int label) {
  const double xr = x[0] - obstacle.x;
  const double yr = x[1] - obstacle.y;
  const double c = std::cos(x[2]);
  const double s = std::sin(x[2]);
  const double v = speed;
  const double r2 = obstacle.radius * obstacle.radius;

  const double radial_speed = xr * c + yr * s;
  const double h = 2.0 * v * radial_speed + p.alpha * (xr * xr + yr * yr - r2);
  const double lf_h = 2.0 * v * v + 2.0 * p.alpha * v * radial_speed;
  const double lg_h = 2.0 * v * (yr * c - xr * s);

  LinearCbfConstraint out;
  out.a = ControlVec::Constant(1, lg_h);
  out.b = -lf_h - p.gamma * h;
  out.label = label;
  out.margin = std::sqrt(xr * xr + yr * yr) - obstacle.radius;
  out.barrier = h;
  return out;
}

std::vector<LinearCbfConstraint> dubins_constraints(const StateVec& x, const DubinsParams& dp,
                                                    const CbfParams& p) {
  std::vector<LinearCbfConstraint> out;
  out.reserve(dp.obstacles.size());
  for (std::size_t i = 0; i < dp.obstacles.size(); ++i) {
    out.push_back(dubins_hocbf_constraint(x, dp.obstacles[i], p, dp.speed, static_cast<int>(i)));
  }
  return out;
}

std::array<LinearCbfConstraint, 4> quad_wall_constraints(const StateVec& x, const QuadrotorParams& qp,
                                                         const CbfParams& p) {
  const double px = x[0];
  const double pz = x[1];
  const double s = std::sin(x[2]);
  const double c = std::cos(x[2]);
  const double vx = x[3];
  const double vz = x[4];
  const double w_rate = x[5];
  const double a = p.alpha;
  const double a2 = a * a;
  const double a3 = a2 * a;
  const double g = qp.gravity;
  const double inv_m = 1.0 / qp.mass;
  const double w = qp.half_width;
  const auto margins = quad_wall_distances(x, qp);

  auto make = [&](Wall wall, double f_coeff, double rhs, double barrier) {
    LinearCbfConstraint out;
    out.a = ControlVec::Zero(2);
    out.a[0] = f_coeff;
    out.b = rhs;
    out.label = static_cast<int>(wall);
    out.margin = margins[static_cast<int>(wall)];
    out.barrier = barrier;
    return out;
  };

  // Each row: C = F * coeff - rhs, barrier = bdot + alpha b.
  return {
      // b = w - z:  -F c w/m + 3a (g - F s/m) - 3a^2 zdot + a^3 (w - z)
      make(Wall::kCeiling, (-c * w_rate - 3.0 * a * s) * inv_m,
           -3.0 * a * g + 3.0 * a2 * vz - a3 * (w - pz), -vz + a * (w - pz)),
      // b = w + z:  F c w/m + 3a (F s/m - g) + 3a^2 zdot + a^3 (w + z)
      make(Wall::kFloor, (c * w_rate + 3.0 * a * s) * inv_m,
           3.0 * a * g - 3.0 * a2 * vz - a3 * (w + pz), vz + a * (w + pz)),
      // b = w - x:  F s w/m - 3a F c/m - 3a^2 xdot + a^3 (w - x)
      make(Wall::kRight, (s * w_rate - 3.0 * a * c) * inv_m, 3.0 * a2 * vx - a3 * (w - px),
           -vx + a * (w - px)),
      // b = w + x: -F s w/m + 3a F c/m + 3a^2 xdot + a^3 (w + x)
      make(Wall::kLeft, (-s * w_rate + 3.0 * a * c) * inv_m, -3.0 * a2 * vx - a3 * (w + px),
           vx + a * (w + px)),
  };
}

namespace {

double slack(const LinearCbfConstraint& c, const ControlVec& u) { return c.a.dot(u) - c.b; }

bool satisfies_all(const ControlVec& u, std::span<const LinearCbfConstraint> constraints) {
  for (const auto& c : constraints) {
    if (slack(c, u) < -1e-9) return false;
  }
  return true;
}

ControlVec fallback(const ControlVec& u_ref, std::span<const LinearCbfConstraint> constraints,
                    const ControlBounds& bounds) {
  const LinearCbfConstraint* worst = nullptr;
  double worst_slack = 0.0;
  for (const auto& c : constraints) {
    const double norm = c.a.norm();
    if (norm == 0.0) continue;
    const double normalised = slack(c, u_ref) / norm;
    if (normalised < worst_slack) {
      worst_slack = normalised;
      worst = &c;
    }
  }
  if (worst == nullptr) return clamp(u_ref, bounds);

  QpProblem single{u_ref, {Halfspace{worst->a, worst->b}}, bounds};
  const QpSolution sol = solve(single);
  if (sol.status == QpStatus::kOptimal) return sol.u_star;
  return clamp(solve_single_halfspace(u_ref, worst->a, worst->b), bounds);
}

}  // namespace

FilterResult filter(const ControlVec& u_ref, std::span<const LinearCbfConstraint> constraints,
                    const ControlBounds& bounds) {
  QpProblem problem;
  problem.u_ref = u_ref;
  problem.bounds = bounds;
  problem.ineqs.reserve(constraints.size());
  for (const auto& c : constraints) problem.ineqs.push_back({c.a, c.b});

  FilterResult out;
  const QpSolution sol = solve(problem);
  if (sol.status == QpStatus::kOptimal) {
    out.u = sol.u_star;
  } else {
    out.u = fallback(u_ref, constraints, bounds);
    out.optimal = false;
  }
  out.intervened = (out.u != u_ref);
  return out;
}

std::array<Wall, 4> wall_priority(const StateVec& x, const QuadrotorParams& qp) {
  const auto margins = quad_wall_distances(x, qp);
  std::array<Wall, 4> order{Wall::kCeiling, Wall::kFloor, Wall::kRight, Wall::kLeft};
  std::stable_sort(order.begin(), order.end(), [&](Wall lhs, Wall rhs) {
    return margins[static_cast<int>(lhs)] < margins[static_cast<int>(rhs)];
  });
  return order;
}

FilterResult prioritized_filter(const StateVec& x, const ControlVec& u_mpc, const QuadrotorParams& qp,
                                const CbfParams& p, const ControlBounds& bounds) {
  const auto constraints = quad_wall_constraints(x, qp, p);
  FilterResult out;
  out.u = u_mpc;
  for (Wall wall : wall_priority(x, qp)) {
    const auto& c = constraints[static_cast<int>(wall)];
    const FilterResult step = filter(out.u, std::span(&c, 1), bounds);
    out.u = step.u;
    out.optimal = out.optimal && step.optimal;
  }
  // Later QPs may undo earlier ones when the walls conflict.
  if (!satisfies_all(out.u, constraints)) out.optimal = false;
  out.intervened = (out.u != u_mpc);
  return out;
}

}  // namespace safempc
