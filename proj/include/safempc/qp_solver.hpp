#pragma once

#include "safempc/types.hpp"

#include <vector>

namespace safempc {

// a^T u >= b
struct Halfspace {
  ControlVec a;
  double b = 0.0;
};

// min |u - u_ref|^2 s.t. every halfspace and, when given, per-channel bounds.
struct QpProblem {
  ControlVec u_ref;
  std::vector<Halfspace> ineqs;
  ControlBounds bounds;  // empty, or one interval per channel (infinite ends allowed)
};

enum class QpStatus { kOptimal, kInfeasible };

struct QpSolution {
  ControlVec u_star;
  // Constraints defining the solution. Inequality i has index i; the lower and
  // upper bound of channel j have indices n + 2j and n + 2j + 1.
  std::vector<int> active_set;
  QpStatus status = QpStatus::kInfeasible;
};

// Closed-form projection onto one halfspace.
ControlVec solve_single_halfspace(const ControlVec& u_ref, const ControlVec& a, double b);

// Exact solve by enumerating every active set of at most control_dim
// constraints. Equal objectives resolve to the smaller, then lexicographically
// first, active set. u_ref is returned untouched when it is already feasible.
QpSolution solve(const QpProblem& p);

// Feasibility tolerance applied to the inequalities when selecting a candidate.
inline constexpr double kQpFeasibilityTol = 1e-10;

}  // namespace safempc
