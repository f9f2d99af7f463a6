#pragma once

#include "safempc/harness.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace safempc {

// Header + one row per recorded state: t, state..., control..., l, h..., filter_delta.
// The final row has no control, so its control/h/filter fields are empty.
std::string trajectory_csv(const Trajectory& traj, const Scenario& scenario);

// Costs, safety rates and per-episode rows. Contains no wall-clock data, so it is
// byte-identical across runs with the same scenario and seeds.
nlohmann::json metrics_json(const Scenario& scenario, const std::vector<MetricsReport>& reports);

// Mean planner and filter times per method (hardware dependent).
nlohmann::json timing_json(const Scenario& scenario, const std::vector<MetricsReport>& reports);

// Human-readable comparison table with cost, safety rate and compute time.
std::string comparison_table(const Scenario& scenario, const std::vector<MetricsReport>& reports);

// Planar paths of every episode plus the obstacle or wall geometry.
nlohmann::json plot_json(const Scenario& scenario, const BatchResult& batch);

// Writes, under out_dir:
//   metrics.json, timing.json, table.txt
//   <method>/seed_<seed>.csv for every episode, <method>/plot.json
// Throws std::runtime_error naming the path on filesystem errors.
void export_results(const Scenario& scenario, const std::vector<BatchResult>& batches,
                    const std::filesystem::path& out_dir);

}  // namespace safempc
