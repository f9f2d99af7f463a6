#pragma once

#include "safempc/dynamics.hpp"
#include "safempc/scenario.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace safempc {

enum class Method { kGmpc, kMppi, kMppiCbf, kGmpcCbf };

inline constexpr Method kAllMethods[] = {Method::kGmpc, Method::kMppi, Method::kMppiCbf, Method::kGmpcCbf};

std::string_view to_string(Method m);
Method parse_method(std::string_view name);  // gmpc | mppi | mppi-cbf | gmpc-cbf
bool uses_filter(Method m);

struct EpisodeMetrics {
  std::uint64_t seed = 0;
  double cost = 0.0;     // sum_{k=1..K} r(x_k) + phi(x_K) on the executed trajectory
  bool safe = false;     // min_k l(x_k) > 0 over every recorded state
  double min_l = 0.0;
  int interventions = 0;     // steps where the filter changed the planner output
  int infeasible_steps = 0;  // steps that needed the filter fallback
  int planner_calls = 0;
  double total_solve_time = 0.0;   // planner only, seconds
  double total_filter_time = 0.0;  // CBF-QP only, seconds
  bool failed = false;
  std::string failure;
};

struct EpisodeResult {
  Trajectory trajectory;
  EpisodeMetrics metrics;
};

// Algorithm 1 closed loop: plan, optionally filter, Euler step, for round(T/dt) steps.
// A numerical failure ends the episode early and marks it failed (and unsafe).
EpisodeResult run_episode(const Scenario& scenario, Method method, std::uint64_t seed);

struct MetricsReport {
  Method method = Method::kGmpcCbf;
  std::optional<double> mean_cost_over_safe;  // empty when no episode was safe
  double safety_rate = 0.0;                   // percent
  double mean_solve_time = 0.0;               // seconds per planner call
  double mean_filter_time = 0.0;              // seconds per filter call (CBF methods)
  int failed_episodes = 0;
  std::vector<EpisodeMetrics> episodes;       // in seed order
};

MetricsReport aggregate(Method method, std::vector<EpisodeMetrics> episodes);

struct BatchResult {
  MetricsReport report;
  std::vector<Trajectory> trajectories;  // in seed order
};

// Episodes run across OpenMP threads; results are stored by seed index so the
// report does not depend on scheduling.
BatchResult run_batch(const Scenario& scenario, Method method, const std::vector<std::uint64_t>& seeds);
// Single-threaded reference for run_batch.
BatchResult run_batch_serial(const Scenario& scenario, Method method,
                             const std::vector<std::uint64_t>& seeds);

// sum_{k=1..K} r(x_k) + phi(x_K), r = phi = goal distance.
double cumulative_cost(const Eigen::MatrixXd& states, const BenchmarkSystem& sys);

}  // namespace safempc
