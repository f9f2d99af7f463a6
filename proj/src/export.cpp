#include "safempc/export.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace safempc {

using nlohmann::json;

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> state_names(SystemId id) {
  if (id == SystemId::kDubins) return {"x", "y", "theta"};
  return {"x", "z", "theta", "xdot", "zdot", "thetadot"};
}

std::vector<std::string> control_names(SystemId id) {
  if (id == SystemId::kDubins) return {"u_turn"};
  return {"F", "M"};
}

std::vector<std::string> barrier_names(const Scenario& s) {
  std::vector<std::string> out;
  if (s.system == SystemId::kDubins) {
    for (std::size_t i = 0; i < s.dubins.obstacles.size(); ++i) out.push_back("h_obstacle" + std::to_string(i));
  } else {
    for (Wall w : {Wall::kCeiling, Wall::kFloor, Wall::kRight, Wall::kLeft}) {
      out.push_back("h_" + std::string(to_string(w)));
    }
  }
  return out;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << content;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

json report_json(const MetricsReport& r) {
  json rows = json::array();
  for (const auto& e : r.episodes) {
    rows.push_back({{"seed", e.seed},
                    {"cost", e.cost},
                    {"safe", e.safe},
                    {"min_l", e.min_l},
                    {"interventions", e.interventions},
                    {"infeasible_steps", e.infeasible_steps},
                    {"failed", e.failed}});
  }
  json out;
  out["method"] = std::string(to_string(r.method));
  out["mean_cost_over_safe"] = r.mean_cost_over_safe ? json(*r.mean_cost_over_safe) : json(nullptr);
  out["safety_rate"] = r.safety_rate;
  out["failed_episodes"] = r.failed_episodes;
  out["episodes"] = rows;
  return out;
}

}  // namespace

std::string trajectory_csv(const Trajectory& traj, const Scenario& scenario) {
  std::ostringstream out;
  std::vector<std::string> header{"t"};
  for (auto& n : state_names(scenario.system)) header.push_back(n);
  for (auto& n : control_names(scenario.system)) header.push_back(n);
  header.push_back("l");
  const auto barriers = barrier_names(scenario);
  for (auto& n : barriers) header.push_back(n);
  header.push_back("filter_delta");
  for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << '\n';

  const Eigen::Index k_max = traj.states.cols();
  for (Eigen::Index k = 0; k < k_max; ++k) {
    out << num(static_cast<double>(k) * traj.dt);
    for (Eigen::Index i = 0; i < traj.states.rows(); ++i) out << ',' << num(traj.states(i, k));
    const bool has_control = k < traj.controls.cols();
    for (Eigen::Index i = 0; i < traj.controls.rows(); ++i) {
      out << ',';
      if (has_control) out << num(traj.controls(i, k));
    }
    out << ',' << num(traj.l_values[k]);
    const bool has_diag = k < static_cast<Eigen::Index>(traj.diagnostics.size());
    for (std::size_t j = 0; j < barriers.size(); ++j) {
      out << ',';
      if (has_diag) out << num(traj.diagnostics[k].h_values[j]);
    }
    out << ',';
    if (has_diag) out << num(traj.diagnostics[k].filter_delta);
    out << '\n';
  }
  return out.str();
}

json metrics_json(const Scenario& scenario, const std::vector<MetricsReport>& reports) {
  json methods = json::array();
  for (const auto& r : reports) methods.push_back(report_json(r));
  return {{"scenario", scenario.name},
          {"system", std::string(to_string(scenario.system))},
          {"steps_per_episode", scenario.steps()},
          {"methods", methods}};
}

json timing_json(const Scenario& scenario, const std::vector<MetricsReport>& reports) {
  json methods = json::array();
  for (const auto& r : reports) {
    methods.push_back({{"method", std::string(to_string(r.method))},
                       {"mean_solve_time_s", r.mean_solve_time},
                       {"mean_filter_time_s", r.mean_filter_time}});
  }
  return {{"scenario", scenario.name}, {"methods", methods}};
}

std::string comparison_table(const Scenario& scenario, const std::vector<MetricsReport>& reports) {
  std::ostringstream out;
  char line[160];
  out << scenario.name << " (" << to_string(scenario.system) << ")\n";
  std::snprintf(line, sizeof line, "%-10s %12s %16s %20s\n", "method", "cost", "safety rate (%)",
                "compute time (ms)");
  out << line;
  for (const auto& r : reports) {
    const std::string cost = r.mean_cost_over_safe ? num(*r.mean_cost_over_safe).substr(0, 10) : "undefined";
    std::snprintf(line, sizeof line, "%-10s %12s %16.1f %20.4f\n", std::string(to_string(r.method)).c_str(),
                  cost.c_str(), r.safety_rate, 1e3 * r.mean_solve_time);
    out << line;
  }
  return out.str();
}

json plot_json(const Scenario& scenario, const BatchResult& batch) {
  json doc;
  doc["system"] = std::string(to_string(scenario.system));
  doc["method"] = std::string(to_string(batch.report.method));
  if (scenario.system == SystemId::kDubins) {
    json obstacles = json::array();
    for (const auto& o : scenario.dubins.obstacles) obstacles.push_back({{"x", o.x}, {"y", o.y}, {"radius", o.radius}});
    doc["obstacles"] = obstacles;
    doc["goal"] = {scenario.dubins.goal[0], scenario.dubins.goal[1]};
  } else {
    doc["room_half_width"] = scenario.quadrotor.half_width;
    doc["goal"] = {scenario.quadrotor.goal[0], scenario.quadrotor.goal[1]};
  }
  json paths = json::array();
  for (std::size_t i = 0; i < batch.trajectories.size(); ++i) {
    const auto& t = batch.trajectories[i];
    std::vector<double> px(t.states.cols());
    std::vector<double> py(t.states.cols());
    for (Eigen::Index k = 0; k < t.states.cols(); ++k) {
      px[k] = t.states(0, k);
      py[k] = t.states(1, k);
    }
    paths.push_back({{"seed", batch.report.episodes[i].seed}, {"safe", batch.report.episodes[i].safe},
                     {"horizontal", px}, {"vertical", py}});
  }
  doc["paths"] = paths;
  return doc;
}

void export_results(const Scenario& scenario, const std::vector<BatchResult>& batches,
                    const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw std::runtime_error("cannot create " + out_dir.string() + ": " + ec.message());

  std::vector<MetricsReport> reports;
  for (const auto& b : batches) reports.push_back(b.report);
  write_file(out_dir / "metrics.json", metrics_json(scenario, reports).dump(2) + "\n");
  write_file(out_dir / "timing.json", timing_json(scenario, reports).dump(2) + "\n");
  write_file(out_dir / "table.txt", comparison_table(scenario, reports));

  for (const auto& b : batches) {
    if (b.trajectories.empty()) continue;
    const auto dir = out_dir / std::string(to_string(b.report.method));
    std::filesystem::create_directories(dir, ec);
    if (ec) throw std::runtime_error("cannot create " + dir.string() + ": " + ec.message());
    for (std::size_t i = 0; i < b.trajectories.size(); ++i) {
      write_file(dir / ("seed_" + std::to_string(b.report.episodes[i].seed) + ".csv"),
                 trajectory_csv(b.trajectories[i], scenario));
    }
    write_file(dir / "plot.json", plot_json(scenario, b).dump() + "\n");
  }
}

}  // namespace safempc
