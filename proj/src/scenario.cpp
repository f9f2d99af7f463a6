#include "safempc/scenario.hpp"

#include "safempc/cbf_filter.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <set>

namespace safempc {

using nlohmann::json;

Scenario default_dubins_scenario() {
  Scenario s;
  s.name = "dubins";
  s.system = SystemId::kDubins;
  s.dubins.speed = 1.0;
  s.dubins.goal = {0.5, 0.0};
  s.dubins.max_turn_rate = 2.0;
  s.dubins.obstacles = {Obstacle{-0.3, 0.0, 0.3}};
  s.dt = 0.05;
  s.plan_horizon = 20;
  s.episode_duration = 2.0;
  s.cost.penalty.lambda = 1.0;
  s.cbf = {1.5, 1.0};
  s.mppi.noise_std = {0.5};
  s.mppi.temperature = 0.15;
  s.sampler.center = {-0.3, 0.0};
  s.sampler.inner_radius = 0.45;
  s.sampler.outer_radius = 1.0;
  s.sampler.require_barrier_safe = true;
  return s;
}

Scenario default_quadrotor_scenario() {
  Scenario s;
  s.name = "quadrotor";
  s.system = SystemId::kQuadrotor;
  s.quadrotor = QuadrotorParams{};
  s.quadrotor.torque = {-20.0, 20.0};
  s.dt = 0.05;
  s.plan_horizon = 20;
  s.episode_duration = 3.0;
  s.cost.control_weight = 0.01;
  s.cbf = {6.0, 1.0};
  s.mppi.noise_std = {2.0, 1.0};
  s.mppi.temperature = 0.3;
  s.sampler.room_half_width = 0.8;
  s.sampler.pitch_center = std::numbers::pi / 2.0;
  s.sampler.pitch_spread = 0.3;
  return s;
}

void Scenario::validate() const {
  if (!(dt > 0.0)) throw ConfigError("scenario: dt must be positive");
  if (plan_horizon < 1) throw ConfigError("scenario: plan_horizon must be >= 1");
  if (!(episode_duration >= dt)) throw ConfigError("scenario: episode_duration must be >= dt");
  if (episodes < 0) throw ConfigError("scenario: episodes must be >= 0");
  cost.penalty.validate();
  if (!(cost.control_weight >= 0.0)) throw ConfigError("scenario: control_weight must be >= 0");
  cbf.validate();
  lbfgs.validate();
  const int m = system == SystemId::kDubins ? 1 : 2;
  MppiParams mp = mppi;
  mp.horizon = plan_horizon;
  mp.validate(m);
  if (system == SystemId::kDubins) {
    dubins.validate();
    if (!(sampler.inner_radius >= 0.0 && sampler.outer_radius > sampler.inner_radius)) {
      throw ConfigError("scenario: sampler needs 0 <= inner_radius < outer_radius");
    }
  } else {
    quadrotor.validate();
    if (!(sampler.room_half_width > 0.0)) throw ConfigError("scenario: sampler room_half_width must be positive");
    if (!(sampler.vertical_speed >= 0.0)) throw ConfigError("scenario: sampler vertical_speed must be >= 0");
  }
  if (sampler.max_attempts < 1) throw ConfigError("scenario: sampler max_attempts must be >= 1");
}

int Scenario::steps() const { return static_cast<int>(std::lround(episode_duration / dt)); }

std::vector<std::uint64_t> Scenario::seeds() const {
  std::vector<std::uint64_t> out(episodes);
  for (int i = 0; i < episodes; ++i) out[i] = base_seed + static_cast<std::uint64_t>(i);
  return out;
}

std::unique_ptr<BenchmarkSystem> Scenario::make_system() const {
  if (system == SystemId::kDubins) return std::make_unique<DubinsCar>(dubins);
  return std::make_unique<PlanarQuadrotor>(quadrotor);
}

// ---------------------------------------------------------------------------
// Parsing

namespace {

// Reads keys out of one JSON object and complains about anything left over.
class ObjectReader {
 public:
  ObjectReader(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) throw ConfigError(path_ + ": expected an object");
  }

  ~ObjectReader() noexcept(false) {
    if (std::uncaught_exceptions() > 0) return;
    for (const auto& item : obj_.items()) {
      if (!seen_.count(item.key())) throw ConfigError("unknown key '" + path_ + "." + item.key() + "'");
    }
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return obj_.contains(key);
  }

  template <typename T>
  void read(const std::string& key, T& out) {
    if (!has(key)) return;
    try {
      out = obj_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(path_ + "." + key + ": " + e.what());
    }
  }

  void read_vec2(const std::string& key, Eigen::Vector2d& out) {
    if (!has(key)) return;
    const json& v = obj_.at(key);
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
      throw ConfigError(path_ + "." + key + ": expected [number, number]");
    }
    out = {v[0].get<double>(), v[1].get<double>()};
  }

  void read_interval(const std::string& key, Interval& out) {
    Eigen::Vector2d v(out.lo, out.hi);
    read_vec2(key, v);
    out = {v[0], v[1]};
  }

  ObjectReader child(const std::string& key) { return ObjectReader(obj_.at(key), path_ + "." + key); }
  const json& at(const std::string& key) const { return obj_.at(key); }
  const std::string& path() const { return path_; }

 private:
  const json& obj_;
  std::string path_;
  std::set<std::string> seen_;
};

SystemId parse_system(const std::string& name) {
  if (name == "dubins") return SystemId::kDubins;
  if (name == "quadrotor") return SystemId::kQuadrotor;
  throw ConfigError("unknown system '" + name + "' (expected dubins or quadrotor)");
}

void parse_dubins(ObjectReader r, DubinsParams& p) {
  r.read("speed", p.speed);
  r.read_vec2("goal", p.goal);
  r.read("max_turn_rate", p.max_turn_rate);
  if (r.has("obstacles")) {
    const json& list = r.at("obstacles");
    if (!list.is_array()) throw ConfigError(r.path() + ".obstacles: expected an array");
    p.obstacles.clear();
    for (std::size_t i = 0; i < list.size(); ++i) {
      ObjectReader o(list[i], r.path() + ".obstacles[" + std::to_string(i) + "]");
      Obstacle obs;
      o.read("x", obs.x);
      o.read("y", obs.y);
      o.read("radius", obs.radius);
      p.obstacles.push_back(obs);
    }
  }
}

void parse_quadrotor(ObjectReader r, QuadrotorParams& p) {
  r.read("mass", p.mass);
  r.read("inertia", p.inertia);
  r.read("gravity", p.gravity);
  r.read_vec2("goal", p.goal);
  r.read("half_width", p.half_width);
  r.read_interval("thrust", p.thrust);
  r.read_interval("torque", p.torque);
}

void parse_sampler(ObjectReader r, SamplerSpec& s) {
  r.read_vec2("center", s.center);
  r.read("inner_radius", s.inner_radius);
  r.read("outer_radius", s.outer_radius);
  r.read("heading_center", s.heading_center);
  r.read("heading_spread", s.heading_spread);
  r.read("aim_at_center", s.aim_at_center);
  r.read("room_half_width", s.room_half_width);
  r.read("pitch_center", s.pitch_center);
  r.read("pitch_spread", s.pitch_spread);
  r.read("vertical_speed", s.vertical_speed);
  r.read("require_barrier_safe", s.require_barrier_safe);
  r.read("max_attempts", s.max_attempts);
}

}  // namespace

Scenario parse_scenario(const json& doc) {
  if (!doc.is_object()) throw ConfigError("scenario: expected a JSON object");
  if (!doc.contains("system") || !doc.at("system").is_string()) {
    throw ConfigError("scenario: missing string key 'system'");
  }
  const SystemId id = parse_system(doc.at("system").get<std::string>());
  Scenario s = id == SystemId::kDubins ? default_dubins_scenario() : default_quadrotor_scenario();

  {
    ObjectReader r(doc, "scenario");
    r.has("system");
    r.read("name", s.name);
    r.read("dt", s.dt);
    r.read("plan_horizon", s.plan_horizon);
    r.read("episode_duration", s.episode_duration);
    r.read("episodes", s.episodes);
    r.read("base_seed", s.base_seed);
    if (r.has("dubins")) {
      if (id != SystemId::kDubins) throw ConfigError("scenario: 'dubins' section given for a quadrotor scenario");
      parse_dubins(r.child("dubins"), s.dubins);
    }
    if (r.has("quadrotor")) {
      if (id != SystemId::kQuadrotor) throw ConfigError("scenario: 'quadrotor' section given for a dubins scenario");
      parse_quadrotor(r.child("quadrotor"), s.quadrotor);
    }
    if (r.has("cost")) {
      ObjectReader c = r.child("cost");
      c.read("lambda", s.cost.penalty.lambda);
      c.read("delta", s.cost.penalty.delta);
      c.read("control_weight", s.cost.control_weight);
    }
    if (r.has("cbf")) {
      ObjectReader c = r.child("cbf");
      c.read("alpha", s.cbf.alpha);
      c.read("gamma", s.cbf.gamma);
    }
    if (r.has("lbfgs")) {
      ObjectReader c = r.child("lbfgs");
      c.read("memory", s.lbfgs.memory);
      c.read("max_iters", s.lbfgs.max_iters);
      c.read("grad_tol", s.lbfgs.grad_tol);
      c.read("wolfe_c1", s.lbfgs.wolfe_c1);
      c.read("wolfe_c2", s.lbfgs.wolfe_c2);
      c.read("max_linesearch_steps", s.lbfgs.max_linesearch_steps);
    }
    if (r.has("mppi")) {
      ObjectReader c = r.child("mppi");
      c.read("num_samples", s.mppi.num_samples);
      c.read("noise_std", s.mppi.noise_std);
      c.read("temperature", s.mppi.temperature);
      c.read("seed", s.mppi.seed);
      c.read("parallel", s.mppi.parallel);
    }
    if (r.has("sampler")) parse_sampler(r.child("sampler"), s.sampler);
  }
  s.mppi.horizon = s.plan_horizon;
  s.validate();
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scenario file " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("malformed scenario file " + path.string() + ": " + e.what());
  }
  return parse_scenario(doc);
}

json to_json(const Scenario& s) {
  json doc;
  doc["name"] = s.name;
  doc["system"] = std::string(to_string(s.system));
  doc["dt"] = s.dt;
  doc["plan_horizon"] = s.plan_horizon;
  doc["episode_duration"] = s.episode_duration;
  doc["episodes"] = s.episodes;
  doc["base_seed"] = s.base_seed;
  if (s.system == SystemId::kDubins) {
    json obstacles = json::array();
    for (const auto& o : s.dubins.obstacles) obstacles.push_back({{"x", o.x}, {"y", o.y}, {"radius", o.radius}});
    doc["dubins"] = {{"speed", s.dubins.speed},
                     {"goal", {s.dubins.goal[0], s.dubins.goal[1]}},
                     {"max_turn_rate", s.dubins.max_turn_rate},
                     {"obstacles", obstacles}};
    doc["sampler"] = {{"center", {s.sampler.center[0], s.sampler.center[1]}},
                      {"inner_radius", s.sampler.inner_radius},
                      {"outer_radius", s.sampler.outer_radius},
                      {"heading_center", s.sampler.heading_center},
                      {"heading_spread", s.sampler.heading_spread},
                      {"aim_at_center", s.sampler.aim_at_center},
                      {"require_barrier_safe", s.sampler.require_barrier_safe},
                      {"max_attempts", s.sampler.max_attempts}};
  } else {
    const auto& q = s.quadrotor;
    doc["quadrotor"] = {{"mass", q.mass},
                        {"inertia", q.inertia},
                        {"gravity", q.gravity},
                        {"goal", {q.goal[0], q.goal[1]}},
                        {"half_width", q.half_width},
                        {"thrust", {q.thrust.lo, q.thrust.hi}},
                        {"torque", {q.torque.lo, q.torque.hi}}};
    doc["sampler"] = {{"room_half_width", s.sampler.room_half_width},
                      {"pitch_center", s.sampler.pitch_center},
                      {"pitch_spread", s.sampler.pitch_spread},
                      {"vertical_speed", s.sampler.vertical_speed},
                      {"require_barrier_safe", s.sampler.require_barrier_safe},
                      {"max_attempts", s.sampler.max_attempts}};
  }
  doc["cost"] = {{"lambda", s.cost.penalty.lambda},
                 {"delta", s.cost.penalty.delta},
                 {"control_weight", s.cost.control_weight}};
  doc["cbf"] = {{"alpha", s.cbf.alpha}, {"gamma", s.cbf.gamma}};
  doc["lbfgs"] = {{"memory", s.lbfgs.memory},
                  {"max_iters", s.lbfgs.max_iters},
                  {"grad_tol", s.lbfgs.grad_tol},
                  {"wolfe_c1", s.lbfgs.wolfe_c1},
                  {"wolfe_c2", s.lbfgs.wolfe_c2},
                  {"max_linesearch_steps", s.lbfgs.max_linesearch_steps}};
  doc["mppi"] = {{"num_samples", s.mppi.num_samples},
                 {"noise_std", s.mppi.noise_std},
                 {"temperature", s.mppi.temperature},
                 {"seed", s.mppi.seed},
                 {"parallel", s.mppi.parallel}};
  return doc;
}

namespace {

bool barriers_nonnegative(const Scenario& s, const StateVec& x) {
  auto nonnegative = [](const auto& constraints) {
    for (const auto& c : constraints) {
      if (c.barrier < 0.0) return false;
    }
    return true;
  };
  if (s.system == SystemId::kDubins) return nonnegative(dubins_constraints(x, s.dubins, s.cbf));
  return nonnegative(quad_wall_constraints(x, s.quadrotor, s.cbf));
}

}  // namespace

StateVec sample_initial_state(const Scenario& s, const BenchmarkSystem& sys, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto& sp = s.sampler;
  for (int attempt = 0; attempt < sp.max_attempts; ++attempt) {
    StateVec x;
    if (s.system == SystemId::kDubins) {
      const double r2_lo = sp.inner_radius * sp.inner_radius;
      const double r2_hi = sp.outer_radius * sp.outer_radius;
      const double radius = std::sqrt(r2_lo + (r2_hi - r2_lo) * unit(rng));
      const double bearing = 2.0 * std::numbers::pi * unit(rng);
      const double jitter = (2.0 * unit(rng) - 1.0) * sp.heading_spread;
      x = StateVec::Zero(3);
      x[0] = sp.center[0] + radius * std::cos(bearing);
      x[1] = sp.center[1] + radius * std::sin(bearing);
      // Heading back at the centre is bearing + pi.
      x[2] = (sp.aim_at_center ? bearing + std::numbers::pi : sp.heading_center) + jitter;
    } else {
      const double w = sp.room_half_width;
      x = StateVec::Zero(6);
      x[0] = w * (2.0 * unit(rng) - 1.0);
      x[1] = w * (2.0 * unit(rng) - 1.0);
      x[2] = sp.pitch_center + sp.pitch_spread * (2.0 * unit(rng) - 1.0);
      if (sp.vertical_speed > 0.0) x[4] = sp.vertical_speed * (2.0 * unit(rng) - 1.0);
    }
    if (sys.constraint(x) <= s.cost.penalty.delta) continue;
    if (sp.require_barrier_safe && !barriers_nonnegative(s, x)) continue;
    return x;
  }
  throw ConfigError("sampler: no admissible initial state (l(x0) > delta, barrier check if enabled) after max_attempts draws");
}

}  // namespace safempc
