#pragma once

#include "safempc/cbf_filter.hpp"
#include "safempc/cost_model.hpp"
#include "safempc/lbfgs.hpp"
#include "safempc/mppi.hpp"
#include "safempc/systems.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <memory>
#include <vector>

namespace safempc {

// Initial-state distribution for an episode. States with l(x0) <= delta are
// rejected and redrawn.
struct SamplerSpec {
  // Dubins: position uniform (by area) on an annulus, heading uniform in
  // [heading_center - heading_spread, heading_center + heading_spread]. With
  // aim_at_center the heading is measured from the bearing to the centre.
  Eigen::Vector2d center{0.0, 0.0};
  double inner_radius = 0.5;
  double outer_radius = 1.0;
  double heading_center = 0.0;
  double heading_spread = 3.141592653589793;
  bool aim_at_center = false;

  // Quadrotor: position uniform in |x|, |z| <= room_half_width, pitch uniform
  // in pitch_center +- pitch_spread, vertical rate uniform in
  // +- vertical_speed, other rates zero.
  double room_half_width = 0.8;
  double pitch_center = 1.5707963267948966;
  double pitch_spread = 0.3;
  double vertical_speed = 0.0;

  // Also reject draws where any CBF barrier is already negative, i.e. starts
  // outside the set the filter can keep invariant.
  bool require_barrier_safe = false;

  int max_attempts = 100000;
};

struct Scenario {
  std::string name = "scenario";
  SystemId system = SystemId::kDubins;
  DubinsParams dubins;
  QuadrotorParams quadrotor;
  double dt = 0.05;
  int plan_horizon = 20;
  double episode_duration = 2.0;
  CostParams cost;
  CbfParams cbf;
  LbfgsOptions lbfgs;
  MppiParams mppi;
  SamplerSpec sampler;
  int episodes = 20;
  std::uint64_t base_seed = 0;

  void validate() const;
  int steps() const;  // closed-loop steps, round(T / dt)
  std::vector<std::uint64_t> seeds() const;
  std::unique_ptr<BenchmarkSystem> make_system() const;
};

Scenario default_dubins_scenario();
Scenario default_quadrotor_scenario();

// Parses a scenario document; keys not listed in the schema are rejected with
// a ConfigError naming the offending path. Missing keys keep their defaults
// (the defaults of the named system).
Scenario parse_scenario(const nlohmann::json& doc);
Scenario load_scenario(const std::filesystem::path& path);
nlohmann::json to_json(const Scenario& s);

// Deterministic in `seed`.
StateVec sample_initial_state(const Scenario& s, const BenchmarkSystem& sys, std::uint64_t seed);

}  // namespace safempc
