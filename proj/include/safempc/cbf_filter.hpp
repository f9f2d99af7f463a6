#pragma once

#include "safempc/qp_solver.hpp"
#include "safempc/systems.hpp"

#include <array>
#include <span>
#include <vector>

namespace safempc {

struct CbfParams {
  double alpha = 1.5;  // HOCBF rate, 1/s
  double gamma = 1.0;  // linear class-K gain, kappa(h) = gamma h

  void validate() const;
};

// a^T u >= b, one physical constraint.
struct LinearCbfConstraint {
  ControlVec a;
  double b = 0.0;
  int label = 0;         // obstacle index, or static_cast<int>(Wall)
  double margin = 0.0;   // distance to the boundary, used for prioritisation
  double barrier = 0.0;  // barrier value at the current state (diagnostics)
};

// HOCBF for one obstacle, evaluated in obstacle-relative coordinates:
//   h = 2 v (x_r cos th + y_r sin th) + alpha (x_r^2 + y_r^2 - r^2)
//   a = L_g h,  b = -L_f h - gamma h
LinearCbfConstraint dubins_hocbf_constraint(const StateVec& x, const Obstacle& obstacle,
                                            const CbfParams& p, double speed, int label = 0);

std::vector<LinearCbfConstraint> dubins_constraints(const StateVec& x, const DubinsParams& dp,
                                                    const CbfParams& p);

// Third-order wall conditions (d/dt + alpha)^3 b >= 0 for b = w -+ z, w -+ x,
// with thrust held constant over the step. They are linear in F and have no
// M term. Order: ceiling, floor, right, left.
std::array<LinearCbfConstraint, 4> quad_wall_constraints(const StateVec& x, const QuadrotorParams& qp,
                                                         const CbfParams& p);

struct FilterResult {
  ControlVec u;
  bool optimal = true;      // false when the fallback policy had to be used
  bool intervened = false;  // output differs from the reference
};

// One CBF-QP over all constraints plus bounds. When the QP is infeasible the
// most violated constraint (by normalised slack) is kept alone with the
// bounds, and if that still fails the projection onto it is clamped.
FilterResult filter(const ControlVec& u_ref, std::span<const LinearCbfConstraint> constraints,
                    const ControlBounds& bounds);

// Chain of single-constraint QPs, closest wall first (ties by wall order),
// each QP's answer becoming the next reference.
FilterResult prioritized_filter(const StateVec& x, const ControlVec& u_mpc, const QuadrotorParams& qp,
                                const CbfParams& p, const ControlBounds& bounds);

// Order in which prioritized_filter visits the walls at state x.
std::array<Wall, 4> wall_priority(const StateVec& x, const QuadrotorParams& qp);

}  // namespace safempc
