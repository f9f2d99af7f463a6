#include "safempc/cost_model.hpp"

#include <cmath>

namespace safempc {

void PenaltyParams::validate() const {
  if (!(lambda > 0.0)) throw ConfigError("penalty: lambda must be positive");
  if (!(delta > 0.0)) throw ConfigError("penalty: delta must be positive");
}

double objective(const StateVec& x0, const Eigen::Ref<const Eigen::MatrixXd>& useq,
                 const HorizonProblem& problem) {
  const BenchmarkSystem& sys = *problem.system;
  const PenaltyParams& pen = problem.cost.penalty;
  const double w = problem.cost.control_weight;

  const ControlVec neutral = sys.neutral_control();
  StateVec x = x0;
  double total = 0.0;
  for (Eigen::Index k = 0; k < useq.cols(); ++k) {
    const ControlVec u = useq.col(k);
    total += sys.goal_distance(x) + soft_penalty(sys.constraint(x), pen);
    if (w != 0.0) total += w * (u - neutral).squaredNorm();
    x += (sys.drift(x) + sys.actuation(x) * u) * problem.dt;
    if (!x.allFinite()) throw NumericalError("objective: non-finite rollout", static_cast<int>(k));
  }
  total += sys.goal_distance(x) + soft_penalty(sys.constraint(x), pen);
  return total;
}

}  // namespace safempc
