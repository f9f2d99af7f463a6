#include "safempc/harness.hpp"

#include "safempc/cbf_filter.hpp"
#include "safempc/gradient_planner.hpp"
#include "safempc/mppi.hpp"

#include <algorithm>
#include <chrono>
#include <exception>
#include <limits>
#include <optional>

namespace safempc {

std::string_view to_string(Method m) {
  switch (m) {
    case Method::kGmpc:
      return "gmpc";
    case Method::kMppi:
      return "mppi";
    case Method::kMppiCbf:
      return "mppi-cbf";
    case Method::kGmpcCbf:
      return "gmpc-cbf";
  }
  return "unknown";
}

Method parse_method(std::string_view name) {
  for (Method m : kAllMethods) {
    if (to_string(m) == name) return m;
  }
  throw ConfigError("unknown method '" + std::string(name) + "' (expected gmpc, mppi, mppi-cbf or gmpc-cbf)");
}

bool uses_filter(Method m) { return m == Method::kMppiCbf || m == Method::kGmpcCbf; }

double cumulative_cost(const Eigen::MatrixXd& states, const BenchmarkSystem& sys) {
  const Eigen::Index last = states.cols() - 1;
  double total = 0.0;
  for (Eigen::Index k = 1; k <= last; ++k) total += sys.goal_distance(states.col(k));
  total += sys.goal_distance(states.col(last));
  return total;
}

namespace {

using Clock = std::chrono::steady_clock;

// Planner-agnostic step: nominal control plus the optimizer-only wall time.
struct Planned {
  ControlVec u;
  double solve_time;
};

class Controller {
 public:
  Controller(const Scenario& s, Method method, const HorizonProblem& problem, std::uint64_t seed) {
    if (method == Method::kGmpc || method == Method::kGmpcCbf) {
      gmpc_.emplace(problem, s.plan_horizon, s.lbfgs);
    } else {
      MppiParams p = s.mppi;
      p.horizon = s.plan_horizon;
      // Episode-specific stream, still a pure function of (scenario, seed).
      p.seed = s.mppi.seed ^ (0x9E3779B97F4A7C15ull * (seed + 1));
      mppi_.emplace(problem, p);
    }
  }

  Planned plan(const StateVec& x) {
    if (gmpc_) {
      const PlanResult r = gmpc_->plan(x);
      return {r.u_nominal, r.solve_time};
    }
    const MppiResult r = mppi_->plan(x);
    return {r.u_nominal, r.solve_time};
  }

 private:
  std::optional<GradientPlanner> gmpc_;
  std::optional<MppiPlanner> mppi_;
};

std::vector<double> barrier_values(const Scenario& s, const StateVec& x) {
  std::vector<double> out;
  if (s.system == SystemId::kDubins) {
    for (const auto& c : dubins_constraints(x, s.dubins, s.cbf)) out.push_back(c.barrier);
  } else {
    for (const auto& c : quad_wall_constraints(x, s.quadrotor, s.cbf)) out.push_back(c.barrier);
  }
  return out;
}

FilterResult apply_filter(const Scenario& s, const BenchmarkSystem& sys, const StateVec& x,
                          const ControlVec& u) {
  if (s.system == SystemId::kDubins) {
    const auto constraints = dubins_constraints(x, s.dubins, s.cbf);
    return filter(u, constraints, sys.control_bounds());
  }
  return prioritized_filter(x, u, s.quadrotor, s.cbf, sys.control_bounds());
}

}  // namespace

EpisodeResult run_episode(const Scenario& scenario, Method method, std::uint64_t seed) {
  const auto system = scenario.make_system();
  const BenchmarkSystem& sys = *system;
  const HorizonProblem problem{&sys, scenario.dt, scenario.cost};
  const int steps = scenario.steps();
  const int n = sys.state_dim();
  const int m = sys.control_dim();

  EpisodeResult out;
  EpisodeMetrics& metrics = out.metrics;
  metrics.seed = seed;
  Trajectory& traj = out.trajectory;
  traj.dt = scenario.dt;
  traj.states.resize(n, steps + 1);
  traj.controls.resize(m, steps);

  StateVec x = sample_initial_state(scenario, sys, seed);
  traj.states.col(0) = x;
  traj.l_values.push_back(sys.constraint(x));

  Controller controller(scenario, method, problem, seed);
  int done = 0;
  try {
    for (int t = 0; t < steps; ++t) {
      const Planned planned = controller.plan(x);
      ++metrics.planner_calls;
      metrics.total_solve_time += planned.solve_time;

      StepDiagnostics diag;
      diag.h_values = barrier_values(scenario, x);
      ControlVec u = planned.u;
      if (uses_filter(method)) {
        const auto t0 = Clock::now();
        const FilterResult filtered = apply_filter(scenario, sys, x, planned.u);
        metrics.total_filter_time += std::chrono::duration<double>(Clock::now() - t0).count();
        u = filtered.u;
        diag.filter_delta = (filtered.u - planned.u).norm();
        diag.filter_infeasible = !filtered.optimal;
        if (filtered.intervened) ++metrics.interventions;
        if (!filtered.optimal) ++metrics.infeasible_steps;
      }

      x = euler_step(x, u, scenario.dt, sys);
      traj.controls.col(t) = u;
      traj.states.col(t + 1) = x;
      traj.l_values.push_back(sys.constraint(x));
      traj.diagnostics.push_back(std::move(diag));
      done = t + 1;
    }
  } catch (const NumericalError& e) {
    metrics.failed = true;
    metrics.failure = e.what();
    traj.states.conservativeResize(n, done + 1);
    traj.controls.conservativeResize(m, done);
  }

  metrics.min_l = *std::min_element(traj.l_values.begin(), traj.l_values.end());
  metrics.safe = !metrics.failed && metrics.min_l > 0.0;
  metrics.cost = cumulative_cost(traj.states, sys);
  return out;
}

MetricsReport aggregate(Method method, std::vector<EpisodeMetrics> episodes) {
  MetricsReport report;
  report.method = method;
  report.episodes = std::move(episodes);
  if (report.episodes.empty()) return report;

  int safe = 0;
  double safe_cost = 0.0;
  long calls = 0;
  double solve = 0.0;
  double filter_time = 0.0;
  for (const auto& e : report.episodes) {
    if (e.safe) {
      ++safe;
      safe_cost += e.cost;
    }
    if (e.failed) ++report.failed_episodes;
    calls += e.planner_calls;
    solve += e.total_solve_time;
    filter_time += e.total_filter_time;
  }
  report.safety_rate = 100.0 * safe / static_cast<double>(report.episodes.size());
  if (safe > 0) report.mean_cost_over_safe = safe_cost / safe;
  if (calls > 0) {
    report.mean_solve_time = solve / static_cast<double>(calls);
    report.mean_filter_time = uses_filter(method) ? filter_time / static_cast<double>(calls) : 0.0;
  }
  return report;
}

namespace {

BatchResult collect(Method method, std::vector<EpisodeResult>& results) {
  BatchResult batch;
  std::vector<EpisodeMetrics> metrics;
  metrics.reserve(results.size());
  for (auto& r : results) {
    metrics.push_back(std::move(r.metrics));
    batch.trajectories.push_back(std::move(r.trajectory));
  }
  batch.report = aggregate(method, std::move(metrics));
  return batch;
}

}  // namespace

BatchResult run_batch(const Scenario& scenario, Method method, const std::vector<std::uint64_t>& seeds) {
  scenario.validate();
  std::vector<EpisodeResult> results(seeds.size());
  const long n = static_cast<long>(seeds.size());
  // Configuration errors are raised before the parallel region.
  if (n > 0) {
    const auto sys = scenario.make_system();
    (void)sample_initial_state(scenario, *sys, seeds[0]);
  }
  std::exception_ptr error;
#pragma omp parallel for schedule(dynamic, 1)
  for (long i = 0; i < n; ++i) {
    try {
      results[i] = run_episode(scenario, method, seeds[i]);
    } catch (...) {
#pragma omp critical(safempc_batch_error)
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
  return collect(method, results);
}

BatchResult run_batch_serial(const Scenario& scenario, Method method,
                             const std::vector<std::uint64_t>& seeds) {
  scenario.validate();
  std::vector<EpisodeResult> results;
  results.reserve(seeds.size());
  for (std::uint64_t seed : seeds) results.push_back(run_episode(scenario, method, seed));
  return collect(method, results);
}

}  // namespace safempc
