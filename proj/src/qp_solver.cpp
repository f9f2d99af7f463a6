#include "safempc/qp_solver.hpp"

#include <cmath>
#include <limits>

namespace safempc {

ControlVec solve_single_halfspace(const ControlVec& u_ref, const ControlVec& a, double b) {
  const double slack = a.dot(u_ref) - b;
  if (slack >= 0.0) return u_ref;
  return u_ref + ((b - a.dot(u_ref)) / a.squaredNorm()) * a;
}

namespace {

struct Row {
  ControlVec a;
  double b;
  int index;
};

bool feasible(const ControlVec& u, const QpProblem& p) {
  for (const auto& c : p.ineqs) {
    if (c.a.dot(u) < c.b - kQpFeasibilityTol) return false;
  }
  for (std::size_t j = 0; j < p.bounds.size(); ++j) {
    const double tol = 1e-12 * (1.0 + std::abs(u[j]));
    if (u[j] < p.bounds[j].lo - tol || u[j] > p.bounds[j].hi + tol) return false;
  }
  return true;
}

// Projection of u_ref onto {a_i^T u = b_i, i in subset}; false when the rows
// are linearly dependent.
bool project(const ControlVec& u_ref, const std::vector<Row>& rows, const std::vector<int>& subset,
             ControlVec& out) {
  const int k = static_cast<int>(subset.size());
  const int m = static_cast<int>(u_ref.size());
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxControlDim, kMaxControlDim> a(k, m);
  Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxControlDim, 1> rhs(k);
  for (int i = 0; i < k; ++i) {
    a.row(i) = rows[subset[i]].a.transpose();
    rhs[i] = rows[subset[i]].b - rows[subset[i]].a.dot(u_ref);
  }
  const auto gram = (a * a.transpose()).eval();
  Eigen::FullPivLU<std::decay_t<decltype(gram)>> lu(gram);
  lu.setThreshold(1e-12);
  if (lu.rank() < k) return false;
  out = u_ref + a.transpose() * lu.solve(rhs);
  return out.allFinite();
}

// Calls visit(subset) for every size-k subset of {0..n-1} in lexicographic order.
template <typename Visit>
void for_each_subset(int n, int k, Visit&& visit) {
  std::vector<int> idx(k);
  for (int i = 0; i < k; ++i) idx[i] = i;
  while (true) {
    visit(idx);
    int i = k - 1;
    while (i >= 0 && idx[i] == n - k + i) --i;
    if (i < 0) return;
    ++idx[i];
    for (int j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
}

}  // namespace

QpSolution solve(const QpProblem& p) {
  const int m = static_cast<int>(p.u_ref.size());
  const int n_ineq = static_cast<int>(p.ineqs.size());

  QpSolution sol;
  sol.u_star = p.u_ref;
  if (feasible(p.u_ref, p)) {
    sol.status = QpStatus::kOptimal;
    return sol;
  }

  std::vector<Row> rows;
  for (int i = 0; i < n_ineq; ++i) rows.push_back({p.ineqs[i].a, p.ineqs[i].b, i});
  for (std::size_t j = 0; j < p.bounds.size(); ++j) {
    ControlVec e = ControlVec::Zero(m);
    if (std::isfinite(p.bounds[j].lo)) {
      e[j] = 1.0;
      rows.push_back({e, p.bounds[j].lo, n_ineq + 2 * static_cast<int>(j)});
    }
    if (std::isfinite(p.bounds[j].hi)) {
      e[j] = -1.0;
      rows.push_back({e, -p.bounds[j].hi, n_ineq + 2 * static_cast<int>(j) + 1});
    }
  }

  const int n_rows = static_cast<int>(rows.size());
  double best = std::numeric_limits<double>::infinity();
  std::vector<int> best_subset;
  ControlVec best_u;
  ControlVec candidate;
  for (int k = 1; k <= std::min(m, n_rows); ++k) {
    for_each_subset(n_rows, k, [&](const std::vector<int>& subset) {
      if (!project(p.u_ref, rows, subset, candidate)) return;
      if (!feasible(candidate, p)) return;
      const double obj = (candidate - p.u_ref).squaredNorm();
      if (best_subset.empty() || obj < best - 1e-14 * (1.0 + best)) {
        best = obj;
        best_subset = subset;
        best_u = candidate;
      }
    });
  }
  if (!std::isfinite(best)) return sol;

  sol.status = QpStatus::kOptimal;
  sol.u_star = p.bounds.empty() ? best_u : clamp(best_u, p.bounds);
  for (int r : best_subset) sol.active_set.push_back(rows[r].index);
  return sol;
}

}  // namespace safempc
