#include "safempc/mppi.hpp"

#include "safempc/gradient_planner.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <random>

namespace safempc {

void MppiParams::validate(int control_dim) const {
  if (num_samples < 1) throw ConfigError("mppi: num_samples must be >= 1");
  if (horizon < 1) throw ConfigError("mppi: horizon must be >= 1");
  if (!(temperature > 0.0)) throw ConfigError("mppi: temperature must be positive");
  if (static_cast<int>(noise_std.size()) != control_dim) {
    throw ConfigError("mppi: noise_std needs one entry per control channel");
  }
  for (double s : noise_std) {
    if (!(s > 0.0)) throw ConfigError("mppi: noise_std entries must be positive");
  }
}

std::vector<double> softmax_weights(std::span<const double> costs, double beta) {
  double best = std::numeric_limits<double>::infinity();
  for (double c : costs) {
    if (std::isfinite(c)) best = std::min(best, c);
  }
  if (!std::isfinite(best)) throw NumericalError("mppi: every sample cost is non-finite");

  std::vector<double> w(costs.size(), 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < costs.size(); ++i) {
    if (std::isfinite(costs[i])) {
      w[i] = std::exp(-(costs[i] - best) / beta);
      total += w[i];
    }
  }
  for (double& wi : w) wi /= total;
  return w;
}

namespace {

double sample_cost(const StateVec& x0, const Eigen::MatrixXd& samples, Eigen::Index i,
                   const HorizonProblem& problem) {
  const int m = problem.system->control_dim();
  Eigen::Map<const Eigen::MatrixXd> useq(samples.col(i).data(), m, samples.rows() / m);
  try {
    return objective(x0, useq, problem);
  } catch (const NumericalError&) {
    return std::numeric_limits<double>::infinity();
  }
}

}  // namespace

void evaluate_rollout_costs_serial(const StateVec& x0, const Eigen::MatrixXd& samples,
                                   const HorizonProblem& problem, std::span<double> costs) {
  for (Eigen::Index i = 0; i < samples.cols(); ++i) costs[i] = sample_cost(x0, samples, i, problem);
}

void evaluate_rollout_costs_parallel(const StateVec& x0, const Eigen::MatrixXd& samples,
                                     const HorizonProblem& problem, std::span<double> costs) {
  const Eigen::Index n = samples.cols();
#pragma omp parallel for schedule(static)
  for (Eigen::Index i = 0; i < n; ++i) costs[i] = sample_cost(x0, samples, i, problem);
}

MppiResult mppi_plan(const StateVec& x_t, const ControlSequence& nominal, const MppiParams& params,
                     const HorizonProblem& problem) {
  const int m = problem.system->control_dim();
  params.validate(m);
  if (nominal.rows() != m || nominal.cols() != params.horizon) {
    throw ConfigError("mppi: nominal sequence has the wrong shape");
  }
  const auto& bounds = problem.system->control_bounds();
  const int h = params.horizon;

  const auto t0 = std::chrono::steady_clock::now();

  // Noise is drawn serially so the samples do not depend on thread count.
  std::mt19937_64 rng(params.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd samples(m * h, params.num_samples);
  for (int i = 0; i < params.num_samples; ++i) {
    for (int k = 0; k < h; ++k) {
      for (int j = 0; j < m; ++j) {
        const double u = nominal(j, k) + params.noise_std[j] * normal(rng);
        samples(k * m + j, i) = std::min(std::max(u, bounds[j].lo), bounds[j].hi);
      }
    }
  }

  std::vector<double> costs(params.num_samples);
  if (params.parallel) {
    evaluate_rollout_costs_parallel(x_t, samples, problem, costs);
  } else {
    evaluate_rollout_costs_serial(x_t, samples, problem, costs);
  }
  const std::vector<double> w = softmax_weights(costs, params.temperature);

  // Weighted perturbation, ordered sum. Perturbations are taken after clamping
  // so the update stays inside the control bounds.
  const Eigen::Map<const Eigen::VectorXd> base(nominal.data(), nominal.size());
  Eigen::VectorXd update = Eigen::VectorXd::Zero(m * h);
  for (int i = 0; i < params.num_samples; ++i) {
    if (w[i] != 0.0) update += w[i] * (samples.col(i) - base);
  }

  MppiResult result;
  result.sequence = nominal + Eigen::Map<const Eigen::MatrixXd>(update.data(), m, h);
  for (int k = 0; k < h; ++k) result.sequence.col(k) = clamp(result.sequence.col(k), bounds);
  result.u_nominal = result.sequence.col(0);
  result.solve_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

MppiPlanner::MppiPlanner(HorizonProblem problem, MppiParams params)
    : problem_(problem), params_(std::move(params)) {
  if (problem_.system == nullptr) throw ConfigError("mppi: missing system");
  params_.validate(problem_.system->control_dim());
}

ControlSequence MppiPlanner::nominal() const {
  if (previous_.size() != 0) return previous_;
  return problem_.system->neutral_control().replicate(1, params_.horizon);
}

MppiResult MppiPlanner::plan(const StateVec& x_t) {
  MppiParams step = params_;
  std::seed_seq seq{static_cast<std::uint32_t>(params_.seed), static_cast<std::uint32_t>(params_.seed >> 32),
                    static_cast<std::uint32_t>(calls_), static_cast<std::uint32_t>(calls_ >> 32)};
  std::mt19937_64 mixer(seq);
  step.seed = mixer();
  ++calls_;

  MppiResult result = mppi_plan(x_t, nominal(), step, problem_);
  previous_ = shift_warm_start(result.sequence);
  return result;
}

}  // namespace safempc
