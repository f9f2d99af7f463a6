#include "safempc/lbfgs.hpp"

#include <cmath>
#include <vector>

namespace safempc {

void LbfgsOptions::validate() const {
  if (memory < 1) throw ConfigError("lbfgs: memory must be >= 1");
  if (max_iters < 0) throw ConfigError("lbfgs: max_iters must be >= 0");
  if (!(grad_tol > 0.0)) throw ConfigError("lbfgs: grad_tol must be positive");
  if (!(0.0 < wolfe_c1 && wolfe_c1 < wolfe_c2 && wolfe_c2 < 1.0)) {
    throw ConfigError("lbfgs: need 0 < c1 < c2 < 1");
  }
  if (max_linesearch_steps < 1) throw ConfigError("lbfgs: max_linesearch_steps must be >= 1");
}

std::string_view to_string(Termination t) {
  switch (t) {
    case Termination::kConverged:
      return "converged";
    case Termination::kMaxIters:
      return "max_iters";
    case Termination::kLinesearchFailure:
      return "linesearch_failure";
  }
  return "unknown";
}

Eigen::VectorXd two_loop_direction(const std::deque<CurvaturePair>& history,
                                   const Eigen::VectorXd& grad) {
  Eigen::VectorXd q = grad;
  if (history.empty()) return -q;

  const std::size_t n = history.size();
  std::vector<double> rho(n);
  std::vector<double> alpha(n);
  for (std::size_t i = n; i-- > 0;) {
    const auto& p = history[i];
    rho[i] = 1.0 / p.s.dot(p.y);
    alpha[i] = rho[i] * p.s.dot(q);
    q -= alpha[i] * p.y;
  }
  const auto& newest = history.back();
  q *= newest.s.dot(newest.y) / newest.y.squaredNorm();
  for (std::size_t i = 0; i < n; ++i) {
    const auto& p = history[i];
    const double beta = rho[i] * p.y.dot(q);
    q += (alpha[i] - beta) * p.s;
  }
  return -q;
}

namespace {

struct Sample {
  double alpha = 0.0;
  double f = 0.0;
  double slope = 0.0;
};

// Minimiser of the cubic through two (alpha, f, slope) samples, safeguarded
// to stay inside the bracket; falls back to bisection.
double interpolate(const Sample& lo, const Sample& hi) {
  const double left = std::min(lo.alpha, hi.alpha);
  const double right = std::max(lo.alpha, hi.alpha);
  const double width = right - left;
  const double mid = 0.5 * (left + right);

  const double d1 = lo.slope + hi.slope - 3.0 * (lo.f - hi.f) / (lo.alpha - hi.alpha);
  const double disc = d1 * d1 - lo.slope * hi.slope;
  if (!(disc >= 0.0) || !std::isfinite(d1)) return mid;
  const double d2 = std::copysign(std::sqrt(disc), hi.alpha - lo.alpha);
  const double denom = hi.slope - lo.slope + 2.0 * d2;
  if (denom == 0.0) return mid;
  const double a = hi.alpha - (hi.alpha - lo.alpha) * (hi.slope + d2 - d1) / denom;
  if (!std::isfinite(a)) return mid;
  return std::clamp(a, left + 0.1 * width, right - 0.1 * width);
}

class LineSearch {
 public:
  LineSearch(const DifferentiableFunction& fn, const LbfgsOptions& opts, int& evaluations)
      : fn_(fn), opts_(opts), evaluations_(evaluations) {}

  // Strong Wolfe search along d from x. On success, x_new/f_new/g_new hold the
  // accepted point.
  bool search(const Eigen::VectorXd& x, double f0, double slope0, const Eigen::VectorXd& d,
              double alpha_init, Eigen::VectorXd& x_new, double& f_new, Eigen::VectorXd& g_new,
              Sample& accepted) {
    if (!bracket(x, f0, slope0, d, alpha_init, x_new, f_new, g_new, accepted)) return false;
    refine(x_new, f_new, g_new, accepted);
    return true;
  }

 private:
  // One secant step on the slope, exact when f is quadratic along d. Without
  // it the loose c2 leaves L-BFGS without the conjugacy that gives finite
  // termination on quadratics. Kept only if it is itself a better Wolfe point.
  void refine(Eigen::VectorXd& x_new, double& f_new, Eigen::VectorXd& g_new, Sample& accepted) {
    if (budget_ <= 0 || std::abs(accepted.slope) <= 1e-3 * std::abs(slope0_)) return;
    const double denom = slope0_ - accepted.slope;
    if (!(denom < 0.0) && !(denom > 0.0)) return;
    const double alpha = accepted.alpha * slope0_ / denom;
    if (!(alpha > 0.0) || !std::isfinite(alpha)) return;

    Eigen::VectorXd x_try;
    Eigen::VectorXd g_try;
    double f_try = 0.0;
    Sample cur;
    try {
      cur = probe(alpha, x_try, f_try, g_try);
    } catch (const NonFiniteEvaluation&) {
      return;
    }
    const bool wolfe = cur.f <= f0_ + opts_.wolfe_c1 * alpha * slope0_ &&
                       std::abs(cur.slope) <= -opts_.wolfe_c2 * slope0_;
    if (!wolfe || cur.f > accepted.f) return;
    x_new.swap(x_try);
    g_new.swap(g_try);
    f_new = f_try;
    accepted = cur;
  }

  bool bracket(const Eigen::VectorXd& x, double f0, double slope0, const Eigen::VectorXd& d,
               double alpha_init, Eigen::VectorXd& x_new, double& f_new, Eigen::VectorXd& g_new,
               Sample& accepted) {
    x_ = &x;
    d_ = &d;
    f0_ = f0;
    slope0_ = slope0;
    budget_ = opts_.max_linesearch_steps;

    Sample prev{0.0, f0, slope0};
    double alpha = alpha_init;
    for (int i = 0; budget_ > 0; ++i) {
      Sample cur = probe(alpha, x_new, f_new, g_new);
      if (cur.f > f0_ + opts_.wolfe_c1 * alpha * slope0_ || (i > 0 && cur.f >= prev.f)) {
        return zoom(prev, cur, x_new, f_new, g_new, accepted);
      }
      if (std::abs(cur.slope) <= -opts_.wolfe_c2 * slope0_) {
        accepted = cur;
        return true;
      }
      if (cur.slope >= 0.0) return zoom(cur, prev, x_new, f_new, g_new, accepted);
      prev = cur;
      alpha *= 2.0;
    }
    return false;
  }

  Sample probe(double alpha, Eigen::VectorXd& x_new, double& f_new, Eigen::VectorXd& g_new) {
    --budget_;
    ++evaluations_;
    x_new = *x_ + alpha * *d_;
    g_new.resize(x_new.size());
    f_new = fn_(x_new, g_new);
    if (!std::isfinite(f_new) || !g_new.allFinite()) throw NonFiniteEvaluation(x_new);
    return {alpha, f_new, g_new.dot(*d_)};
  }

  bool zoom(Sample lo, Sample hi, Eigen::VectorXd& x_new, double& f_new, Eigen::VectorXd& g_new,
            Sample& accepted) {
    while (budget_ > 0) {
      if (std::abs(hi.alpha - lo.alpha) <= 1e-16 * std::max(1.0, std::abs(lo.alpha))) return false;
      const double alpha = interpolate(lo, hi);
      Sample cur = probe(alpha, x_new, f_new, g_new);
      if (cur.f > f0_ + opts_.wolfe_c1 * alpha * slope0_ || cur.f >= lo.f) {
        hi = cur;
      } else {
        if (std::abs(cur.slope) <= -opts_.wolfe_c2 * slope0_) {
          accepted = cur;
          return true;
        }
        if (cur.slope * (hi.alpha - lo.alpha) >= 0.0) hi = lo;
        lo = cur;
      }
    }
    return false;
  }

  const DifferentiableFunction& fn_;
  const LbfgsOptions& opts_;
  int& evaluations_;
  const Eigen::VectorXd* x_ = nullptr;
  const Eigen::VectorXd* d_ = nullptr;
  double f0_ = 0.0;
  double slope0_ = 0.0;
  int budget_ = 0;
};

}  // namespace

OptimResult minimize(const DifferentiableFunction& fn, const Eigen::VectorXd& x0,
                     const LbfgsOptions& opts, const StepObserver& observer) {
  opts.validate();

  OptimResult result;
  Eigen::VectorXd x = x0;
  Eigen::VectorXd g(x.size());
  double f = fn(x, g);
  result.evaluations = 1;
  if (!std::isfinite(f) || !g.allFinite()) throw NonFiniteEvaluation(x);

  std::deque<CurvaturePair> history;
  LineSearch line_search(fn, opts, result.evaluations);
  Eigen::VectorXd x_new;
  Eigen::VectorXd g_new;
  double f_new = 0.0;

  result.termination = Termination::kMaxIters;
  int iter = 0;
  for (; iter < opts.max_iters; ++iter) {
    if (g.norm() <= opts.grad_tol) {
      result.termination = Termination::kConverged;
      break;
    }

    Eigen::VectorXd d = two_loop_direction(history, g);
    double slope = g.dot(d);
    if (!(slope < 0.0)) {
      history.clear();
      d = -g;
      slope = -g.squaredNorm();
    }
    // Unit step once curvature is known; scaled steepest descent otherwise.
    const double alpha_init = history.empty() ? std::min(1.0, 1.0 / g.norm()) : 1.0;

    Sample accepted;
    if (!line_search.search(x, f, slope, d, alpha_init, x_new, f_new, g_new, accepted)) {
      result.termination = Termination::kLinesearchFailure;
      break;
    }
    if (observer) observer({accepted.alpha, f, slope, accepted.f, accepted.slope});

    CurvaturePair pair{x_new - x, g_new - g};
    const double sy = pair.s.dot(pair.y);
    if (sy > 1e-12 * pair.s.norm() * pair.y.norm()) {
      history.push_back(std::move(pair));
      if (static_cast<int>(history.size()) > opts.memory) history.pop_front();
    }
    x.swap(x_new);
    g.swap(g_new);
    f = f_new;
  }
  if (iter == opts.max_iters && result.termination == Termination::kMaxIters &&
      g.norm() <= opts.grad_tol) {
    result.termination = Termination::kConverged;
  }

  result.x_star = std::move(x);
  result.f_star = f;
  result.grad_norm = g.norm();
  result.iters = iter;
  return result;
}

}  // namespace safempc
