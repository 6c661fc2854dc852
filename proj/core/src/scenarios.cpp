#include "socialforce/scenarios.hpp"

#include <cmath>
#include <stdexcept>

#include "socialforce/log.hpp"

namespace socialforce {

namespace {

constexpr int kMaxSpawnAttempts = 100;

PedestrianState walker(Vec2 position, Vec2 goal, double speed, double tau) {
  PedestrianState s;
  s.position = position;
  s.goal = goal;
  s.preferred_speed = speed;
  s.tau = tau;
  const Vec2 gap = goal - position;
  s.velocity = speed * gap / norm(gap);
  return s;
}

bool clear_of(Vec2 p, const std::vector<PedestrianState>& others, double min_distance) {
  for (const auto& o : others) {
    if (norm(o.position - p) < min_distance) return false;
  }
  return true;
}

/// Uniform point in [x0, x1] x [y0, y1] at least `min_distance` from `placed`.
Vec2 spawn(std::mt19937_64& rng, double x0, double x1, double y0, double y1, const std::vector<PedestrianState>& placed,
           double min_distance, std::size_t index) {
  std::uniform_real_distribution<double> ux(x0, x1);
  std::uniform_real_distribution<double> uy(y0, y1);
  for (int attempt = 0; attempt < kMaxSpawnAttempts; ++attempt) {
    const Vec2 p{ux(rng), uy(rng)};
    if (clear_of(p, placed, min_distance)) return p;
  }
  throw std::runtime_error("scenario: no free spawn position for pedestrian " + std::to_string(index) + " after " +
                           std::to_string(kMaxSpawnAttempts) + " attempts");
}

}  // namespace

std::string to_string(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::Circle: return "circle";
    case ScenarioKind::Corridor: return "corridor";
    case ScenarioKind::Gate: return "gate";
    case ScenarioKind::Headon: return "headon";
  }
  return "?";
}

ScenarioKind parse_scenario_kind(const std::string& name) {
  if (name == "circle") return ScenarioKind::Circle;
  if (name == "corridor") return ScenarioKind::Corridor;
  if (name == "gate") return ScenarioKind::Gate;
  if (name == "headon") return ScenarioKind::Headon;
  throw std::invalid_argument("unknown scenario kind '" + name + "'");
}

void ScenarioSpec::validate() const {
  auto positive = [](double v, const char* what) {
    if (!(v > 0.0)) throw std::invalid_argument(std::string("scenario: ") + what + " must be positive");
  };
  positive(tau, "tau");
  positive(circle_radius, "circle_radius");
  positive(corridor_length, "corridor_length");
  positive(corridor_width, "corridor_width");
  positive(spawn_depth, "spawn_depth");
  positive(gate_width, "gate_width");
  positive(gate_half_height, "gate_half_height");
  positive(gate_goal_distance, "gate_goal_distance");
  positive(separation, "separation");
  positive(speeds.mean, "speeds.mean");
  if (duration < 0.0) throw std::invalid_argument("scenario: duration must be >= 0");
  if (lateral_jitter < 0.0) throw std::invalid_argument("scenario: lateral_jitter must be >= 0");
  if (!(speeds.min > 0.0 && speeds.max > speeds.min) || speeds.stddev < 0.0) {
    throw std::invalid_argument("scenario: invalid speed distribution");
  }
  if (!(angle_max >= angle_min)) throw std::invalid_argument("scenario: empty crossing-angle range");
  if (n_scenes < 1) throw std::invalid_argument("scenario: n_scenes must be >= 1");
  if (circle_observations < 1) throw std::invalid_argument("scenario: circle scenes need >= 1 observation");
  if (gate_width >= 2.0 * gate_half_height) throw std::invalid_argument("scenario: gate wider than barrier");
  if (!(gate_spawn_max > gate_spawn_min && gate_spawn_min > 0.0)) {
    throw std::invalid_argument("scenario: invalid gate spawn band");
  }
  if (corridor_width <= 1.0) throw std::invalid_argument("scenario: corridor too narrow");
}

std::size_t ScenarioSpec::pedestrians() const {
  if (n_pedestrians > 0) return n_pedestrians;
  switch (kind) {
    case ScenarioKind::Circle: return 2;
    case ScenarioKind::Corridor: return 16;
    case ScenarioKind::Gate: return 20;
    case ScenarioKind::Headon: return 2;
  }
  return 2;
}

double ScenarioSpec::simulated_seconds() const {
  if (duration > 0.0) return duration;
  switch (kind) {
    case ScenarioKind::Circle: return 8.0;
    case ScenarioKind::Corridor: return 40.0;
    case ScenarioKind::Gate: return 120.0;
    case ScenarioKind::Headon: return 15.0;
  }
  return 8.0;
}

std::mt19937_64 scene_rng(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

double sample_preferred_speed(const SpeedDistribution& d, std::mt19937_64& rng) {
  if (d.identical) return d.mean;
  std::normal_distribution<double> normal(d.mean, d.stddev);
  for (int attempt = 0; attempt < 1000; ++attempt) {
    const double v = normal(rng);
    if (v >= d.min && v <= d.max) return v;
  }
  throw std::runtime_error("sample_preferred_speed: truncation interval has negligible mass");
}

std::vector<PedestrianState> circle_initial_states(const ScenarioSpec& spec, std::uint64_t seed, std::uint64_t index) {
  auto rng = scene_rng(seed, index);
  const double r = spec.circle_radius;
  std::uniform_real_distribution<double> angle(spec.angle_min, spec.angle_max);
  const double v_primary = sample_preferred_speed(spec.speeds, rng);
  const double v_secondary = sample_preferred_speed(spec.speeds, rng);
  const double phi = angle(rng);
  const Vec2 dir{std::cos(phi), std::sin(phi)};
  return {walker({-r, 0.0}, {r, 0.0}, v_primary, spec.tau), walker(-r * dir, r * dir, v_secondary, spec.tau)};
}

CircleScenes gen_circle_scenes(std::size_t n_scenes, const PotentialModel& generative, std::uint64_t seed,
                               const SimConfig& sim, const ScenarioSpec& spec) {
  if (n_scenes < 1) throw std::invalid_argument("gen_circle_scenes: n_scenes must be >= 1");
  spec.validate();
  CircleScenes out;
  for (std::size_t k = 0; k < n_scenes; ++k) {
    const auto initial = circle_initial_states(spec, seed, k);
    try {
      const auto run = rollout(initial, {}, generative, sim, spec.circle_observations + 1);
      out.scenes.push_back(make_scene(run, initial, {}, sim, "circle", seed));
      out.scenes.back().seed = seed;
    } catch (const std::exception& e) {
      const std::string msg = "circle scene " + std::to_string(k) + " skipped: " + e.what();
      log::warning(msg);
      out.skipped.push_back(msg);
    }
  }
  return out;
}

ScenarioSetup gen_corridor(const ScenarioSpec& spec) {
  spec.validate();
  ScenarioSetup setup;
  const double length = spec.corridor_length;
  const double width = spec.corridor_width;
  const std::size_t n = spec.pedestrians();
  auto rng = scene_rng(spec.seed, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const bool rightward = i % 2 == 0;
    const double x0 = rightward ? 0.0 : length - spec.spawn_depth;
    const Vec2 p = spawn(rng, x0, x0 + spec.spawn_depth, 0.5, width - 0.5, setup.initial, spec.min_spawn_distance, i);
    const Vec2 goal{rightward ? length + 100.0 : -100.0, p.y};
    setup.initial.push_back(walker(p, goal, sample_preferred_speed(spec.speeds, rng), spec.tau));
  }
  setup.walls = {{{0.0, 0.0}, {length, 0.0}}, {{0.0, width}, {length, width}}};
  setup.sim.periodic_x = true;
  setup.sim.x_min = 0.0;
  setup.sim.x_max = length;
  setup.duration = spec.simulated_seconds();
  return setup;
}

ScenarioSetup gen_gate(const ScenarioSpec& spec) {
  spec.validate();
  if (spec.speeds.identical) {
    log::warning("gate scenario with identical preferred speeds: grouping behavior is not expected");
  }
  ScenarioSetup setup;
  const std::size_t n = spec.pedestrians();
  auto rng = scene_rng(spec.seed, 0);
  const double h = spec.gate_spawn_half_height;
  for (std::size_t i = 0; i < n; ++i) {
    const bool from_left = i % 2 == 0;
    const double x0 = from_left ? -spec.gate_spawn_max : spec.gate_spawn_min;
    const double x1 = from_left ? -spec.gate_spawn_min : spec.gate_spawn_max;
    const Vec2 p = spawn(rng, x0, x1, -h, h, setup.initial, spec.min_spawn_distance, i);
    const Vec2 goal{from_left ? spec.gate_goal_distance : -spec.gate_goal_distance, 0.0};
    setup.initial.push_back(walker(p, goal, sample_preferred_speed(spec.speeds, rng), spec.tau));
  }
  const double half_gap = 0.5 * spec.gate_width;
  setup.walls = {{{0.0, -spec.gate_half_height}, {0.0, -half_gap}}, {{0.0, half_gap}, {0.0, spec.gate_half_height}}};
  setup.duration = spec.simulated_seconds();
  return setup;
}

std::vector<PedestrianState> gen_headon(double separation, double lateral_jitter, std::uint64_t seed,
                                        double preferred_speed) {
  if (!(separation > 0.0)) throw std::invalid_argument("gen_headon: separation must be positive");
  double y0 = 0.0;
  double y1 = 0.0;
  if (lateral_jitter > 0.0) {
    auto rng = scene_rng(seed, 0);
    std::uniform_real_distribution<double> jitter(-lateral_jitter, lateral_jitter);
    y0 = jitter(rng);
    y1 = jitter(rng);
  }
  const double h = 0.5 * separation;
  return {walker({-h, y0}, {h + 1.0, 0.0}, preferred_speed, 0.5), walker({h, y1}, {-(h + 1.0), 0.0}, preferred_speed, 0.5)};
}

ScenarioSetup make_setup(const ScenarioSpec& spec) {
  switch (spec.kind) {
    case ScenarioKind::Corridor:
      return gen_corridor(spec);
    case ScenarioKind::Gate:
      return gen_gate(spec);
    case ScenarioKind::Headon: {
      spec.validate();
      ScenarioSetup setup;
      setup.initial = gen_headon(spec.separation, spec.lateral_jitter, spec.seed, spec.speeds.mean);
      for (auto& s : setup.initial) s.tau = spec.tau;
      setup.duration = spec.simulated_seconds();
      return setup;
    }
    case ScenarioKind::Circle: {
      spec.validate();
      ScenarioSetup setup;
      setup.initial = circle_initial_states(spec, spec.seed, 0);
      setup.duration = static_cast<double>(spec.circle_observations) * setup.sim.observation_interval();
      return setup;
    }
  }
  throw std::invalid_argument("make_setup: unknown scenario kind");
}

Scene simulate_setup(const ScenarioSetup& setup, const PotentialModel& model, const std::string& generator,
                     std::uint64_t seed) {
  const double interval = setup.sim.observation_interval();
  const auto n_obs = static_cast<std::size_t>(std::floor(setup.duration / interval + 1e-9)) + 1;
  const auto run = rollout(setup.initial, setup.walls, model, setup.sim, n_obs);
  return make_scene(run, setup.initial, setup.walls, setup.sim, generator, seed);
}

}  // namespace socialforce
