#pragma once

// Shared oracles for the unit and acceptance suites.

#include "safempc/cbf_filter.hpp"
#include "safempc/qp_solver.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <vector>

namespace safempc::testing {

struct GridResult {
  bool any_feasible = false;
  double best_sq_dist = std::numeric_limits<double>::infinity();
  ControlVec best;
};

inline bool satisfies(const ControlVec& u, const std::vector<Halfspace>& hs, double tol = 0.0) {
  for (const auto& h : hs) {
    if (h.a.dot(u) < h.b - tol) return false;
  }
  return true;
}

// Exhaustive search over the grid lo + i*res inside a finite box. For m = 2
// each grid row in u0 is scanned for the grid u1 nearest the reference
// inside the row's feasible interval, which visits the same optimum as
// enumerating every grid point.
inline GridResult grid_search(const ControlVec& u_ref, const std::vector<Halfspace>& hs,
                              const ControlBounds& box, double res) {
  GridResult out;
  const int m = static_cast<int>(u_ref.size());
  auto count = [&](int j) { return static_cast<long>(std::floor((box[j].hi - box[j].lo) / res + 1e-9)); };
  auto grid_value = [&](int j, long i) { return box[j].lo + static_cast<double>(i) * res; };

  auto consider = [&](const ControlVec& u) {
    if (!satisfies(u, hs)) return;
    const double d = (u - u_ref).squaredNorm();
    if (!out.any_feasible || d < out.best_sq_dist) {
      out.any_feasible = true;
      out.best_sq_dist = d;
      out.best = u;
    }
  };

  if (m == 1) {
    ControlVec u(1);
    for (long i = 0; i <= count(0); ++i) {
      u[0] = grid_value(0, i);
      consider(u);
    }
    return out;
  }

  ControlVec u(2);
  const long n1 = count(1);
  for (long i = 0; i <= count(0); ++i) {
    u[0] = grid_value(0, i);
    double lo = box[1].lo;
    double hi = box[1].lo + static_cast<double>(n1) * res;
    bool empty = false;
    for (const auto& h : hs) {
      const double rest = h.b - h.a[0] * u[0];
      if (h.a[1] > 0.0) {
        lo = std::max(lo, rest / h.a[1]);
      } else if (h.a[1] < 0.0) {
        hi = std::min(hi, rest / h.a[1]);
      } else if (rest > 0.0) {
        empty = true;
      }
    }
    if (empty || lo > hi) continue;
    // Grid indices bracketing the clamped reference; both neighbours are
    // tried and the exact feasibility test in consider() has the last word.
    const double target = std::clamp(u_ref[1], lo, hi);
    const long k = static_cast<long>(std::floor((target - box[1].lo) / res));
    for (long c = k - 1; c <= k + 2; ++c) {
      if (c < 0 || c > n1) continue;
      u[1] = grid_value(1, c);
      consider(u);
    }
  }
  return out;
}

inline std::vector<Halfspace> as_halfspaces(std::span<const LinearCbfConstraint> cs) {
  std::vector<Halfspace> out;
  for (const auto& c : cs) out.push_back({c.a, c.b});
  return out;
}

// Adds the box rows so the returned list encodes the whole feasible set.
inline std::vector<Halfspace> with_box(std::vector<Halfspace> hs, const ControlBounds& box) {
  const int m = static_cast<int>(box.size());
  for (int j = 0; j < m; ++j) {
    ControlVec e = ControlVec::Zero(m);
    e[j] = 1.0;
    hs.push_back({e, box[j].lo});
    e[j] = -1.0;
    hs.push_back({e, -box[j].hi});
  }
  return hs;
}

// Stationarity of the projection: u* - u_ref = sum_i mu_i a_i over the
// reported active rows with mu >= 0. Returns the least-squares residual, or
// +inf when a multiplier comes out clearly negative.
inline double kkt_residual(const QpProblem& p, const QpSolution& s) {
  const int m = static_cast<int>(p.u_ref.size());
  const int n = static_cast<int>(p.ineqs.size());
  const ControlVec diff = s.u_star - p.u_ref;
  if (s.active_set.empty()) return diff.norm();
  Eigen::MatrixXd normals(m, static_cast<Eigen::Index>(s.active_set.size()));
  for (std::size_t c = 0; c < s.active_set.size(); ++c) {
    const int idx = s.active_set[c];
    ControlVec a = ControlVec::Zero(m);
    if (idx < n) {
      a = p.ineqs[idx].a;
    } else {
      const int j = (idx - n) / 2;
      a[j] = ((idx - n) % 2 == 0) ? 1.0 : -1.0;
    }
    normals.col(static_cast<Eigen::Index>(c)) = a;
  }
  const Eigen::VectorXd mu = normals.completeOrthogonalDecomposition().solve(Eigen::VectorXd(diff));
  if ((mu.array() < -1e-8).any()) return std::numeric_limits<double>::infinity();
  return (normals * mu - Eigen::VectorXd(diff)).norm();
}

}  // namespace safempc::testing
