// safempc: closed-loop benchmark runner.
//
//   safempc run --scenario dubins.json --method gmpc-cbf --episodes 20 --seed 0 --out results/
//   safempc compare --scenario quadrotor.json --out results/
//   safempc check-gradients --scenario dubins.json
//
// Exit codes: 0 success, 2 configuration error, 3 numerical failure in every episode.

#include "safempc/export.hpp"
#include "safempc/gradient_check.hpp"
#include "safempc/harness.hpp"

#include <CLI11.hpp>

#include <omp.h>

#include <cstdio>
#include <iostream>
#include <optional>

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

struct CommonArgs {
  std::string scenario;
  std::optional<int> episodes;
  std::optional<std::uint64_t> seed;
  std::string out = "results";
  int threads = 0;
};

safempc::Scenario load(const CommonArgs& args) {
  safempc::Scenario s = safempc::load_scenario(args.scenario);
  if (args.episodes) s.episodes = *args.episodes;
  if (args.seed) s.base_seed = *args.seed;
  if (s.episodes < 1) throw safempc::ConfigError("--episodes must be >= 1");
  s.validate();
  return s;
}

bool all_failed(const std::vector<safempc::BatchResult>& batches) {
  bool any = false;
  for (const auto& b : batches) {
    any = any || !b.report.episodes.empty();
    if (b.report.failed_episodes < static_cast<int>(b.report.episodes.size())) return false;
  }
  // An empty batch has nothing that failed.
  return any;
}

int run_methods(const CommonArgs& args, const std::vector<safempc::Method>& methods) {
  const safempc::Scenario scenario = load(args);
  if (args.threads > 0) omp_set_num_threads(args.threads);
  std::vector<safempc::BatchResult> batches;
  for (safempc::Method m : methods) {
    batches.push_back(safempc::run_batch(scenario, m, scenario.seeds()));
  }
  safempc::export_results(scenario, batches, args.out);
  std::vector<safempc::MetricsReport> reports;
  for (const auto& b : batches) reports.push_back(b.report);
  std::cout << safempc::comparison_table(scenario, reports);
  std::cout << "wrote " << args.out << "\n";
  return all_failed(batches) ? kExitNumerical : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gradient-based MPC with CBF-QP safety filtering: benchmark runner"};
  app.require_subcommand(1);

  CommonArgs run_args;
  std::string method_name;
  auto* run = app.add_subcommand("run", "Run one method over a batch of seeded episodes");
  run->add_option("--scenario", run_args.scenario, "Scenario file (JSON)")->required()->check(CLI::ExistingFile);
  run->add_option("--method", method_name, "gmpc | mppi | mppi-cbf | gmpc-cbf")->required();
  run->add_option("--episodes", run_args.episodes, "Number of episodes (overrides the scenario)");
  run->add_option("--seed", run_args.seed, "First episode seed (overrides the scenario)");
  run->add_option("--out", run_args.out, "Output directory");
  run->add_option("--threads", run_args.threads, "OpenMP threads for the episode batch");

  CommonArgs cmp_args;
  auto* compare = app.add_subcommand("compare", "Run all four methods and write a comparison table");
  compare->add_option("--scenario", cmp_args.scenario, "Scenario file (JSON)")->required()->check(CLI::ExistingFile);
  compare->add_option("--episodes", cmp_args.episodes, "Number of episodes (overrides the scenario)");
  compare->add_option("--seed", cmp_args.seed, "First episode seed (overrides the scenario)");
  compare->add_option("--out", cmp_args.out, "Output directory");
  compare->add_option("--threads", cmp_args.threads, "OpenMP threads for the episode batch");

  std::string grad_scenario;
  safempc::GradientCheckOptions grad_opts;
  double grad_tol = 1e-5;
  auto* grad = app.add_subcommand("check-gradients", "Adjoint gradient vs central finite differences");
  grad->add_option("--scenario", grad_scenario, "Scenario file (JSON)")->required()->check(CLI::ExistingFile);
  grad->add_option("--points", grad_opts.points, "Random (state, control sequence) draws");
  grad->add_option("--epsilon", grad_opts.epsilon, "Central-difference step");
  grad->add_option("--seed", grad_opts.seed, "Draw seed");
  grad->add_option("--tolerance", grad_tol, "Maximum accepted relative error");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*run) return run_methods(run_args, {safempc::parse_method(method_name)});
    if (*compare) {
      return run_methods(cmp_args, {std::begin(safempc::kAllMethods), std::end(safempc::kAllMethods)});
    }
    if (*grad) {
      const auto scenario = safempc::load_scenario(grad_scenario);
      const auto report = safempc::check_gradients(scenario, grad_opts);
      std::printf("%s: %d points (%d rejected near kinks), max relative error %.3e, mean %.3e\n",
                  scenario.name.c_str(), report.points, report.rejected_draws, report.max_relative_error,
                  report.mean_relative_error);
      const bool ok = report.max_relative_error < grad_tol;
      std::printf("%s (tolerance %.1e)\n", ok ? "PASS" : "FAIL", grad_tol);
      return ok ? 0 : 1;
    }
  } catch (const safempc::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const safempc::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
