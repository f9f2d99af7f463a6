#pragma once

#include "safempc/types.hpp"

#include <deque>
#include <functional>

namespace safempc {

struct LbfgsOptions {
  int memory = 10;
  int max_iters = 50;
  double grad_tol = 1e-6;
  double wolfe_c1 = 1e-4;
  double wolfe_c2 = 0.9;
  int max_linesearch_steps = 20;

  void validate() const;
};

enum class Termination { kConverged, kMaxIters, kLinesearchFailure };

std::string_view to_string(Termination t);

struct OptimResult {
  Eigen::VectorXd x_star;
  double f_star = 0.0;
  double grad_norm = 0.0;
  int iters = 0;
  int evaluations = 0;
  Termination termination = Termination::kMaxIters;
};

// Value-and-gradient callback; writes the gradient into `grad` (already sized).
using DifferentiableFunction = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd& grad)>;

struct CurvaturePair {
  Eigen::VectorXd s;  // x_{k+1} - x_k
  Eigen::VectorXd y;  // g_{k+1} - g_k
};

// Data for one accepted line-search step, handed to an optional observer so
// callers can assert the strong Wolfe conditions from outside.
struct AcceptedStep {
  double alpha = 0.0;
  double f_start = 0.0;
  double slope_start = 0.0;  // g(x)^T d
  double f_end = 0.0;
  double slope_end = 0.0;    // g(x + alpha d)^T d
};

using StepObserver = std::function<void(const AcceptedStep&)>;

class NonFiniteEvaluation : public NumericalError {
 public:
  NonFiniteEvaluation(Eigen::VectorXd iterate)
      : NumericalError("lbfgs: objective returned a non-finite value or gradient"),
        iterate_(std::move(iterate)) {}

  const Eigen::VectorXd& iterate() const { return iterate_; }

 private:
  Eigen::VectorXd iterate_;
};

// -H grad by the two-loop recursion, H0 = gamma I with gamma = s'y / y'y of the
// newest pair. Empty history gives -grad.
Eigen::VectorXd two_loop_direction(const std::deque<CurvaturePair>& history,
                                   const Eigen::VectorXd& grad);

OptimResult minimize(const DifferentiableFunction& fn, const Eigen::VectorXd& x0,
                     const LbfgsOptions& opts, const StepObserver& observer = {});

}  // namespace safempc
