#pragma once

// Seeded generators for the synthetic experiments. Every generator is a pure
// function of its spec: the same spec (seed included) gives bit-identical output.

#include <cstddef>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "socialforce/dynamics.hpp"
#include "socialforce/potentials.hpp"
#include "socialforce/scene.hpp"

namespace socialforce {

enum class ScenarioKind { Circle, Corridor, Gate, Headon };

std::string to_string(ScenarioKind kind);
ScenarioKind parse_scenario_kind(const std::string& name);

struct SpeedDistribution {
  double mean = 1.34;
  double stddev = 0.26;
  double min = 0.5;
  double max = 2.2;
  /// Every pedestrian walks at `mean`.
  bool identical = false;
};

struct ScenarioSpec {
  ScenarioKind kind = ScenarioKind::Circle;
  /// 0 selects the kind's default (circle 2, corridor 16, gate 20, headon 2).
  std::size_t n_pedestrians = 0;
  /// Simulated seconds; 0 selects the kind's default.
  double duration = 0.0;
  std::uint64_t seed = 0;
  double tau = 0.5;
  SpeedDistribution speeds;

  // circle
  std::size_t n_scenes = 1;
  /// Observations after the anchor; scenes hold one more position.
  std::size_t circle_observations = 20;
  double circle_radius = 4.0;
  double angle_min = std::numbers::pi / 4.0;
  double angle_max = 7.0 * std::numbers::pi / 4.0;

  // corridor
  double corridor_length = 25.0;
  double corridor_width = 6.0;
  double spawn_depth = 5.0;
  double min_spawn_distance = 0.7;

  // gate
  double gate_width = 1.4;
  double gate_half_height = 6.0;
  double gate_spawn_min = 2.0;
  double gate_spawn_max = 8.0;
  double gate_spawn_half_height = 4.0;
  double gate_goal_distance = 12.0;

  // headon
  double separation = 10.0;
  double lateral_jitter = 0.0;

  void validate() const;
  [[nodiscard]] std::size_t pedestrians() const;
  [[nodiscard]] double simulated_seconds() const;
};

/// Initial conditions, walls and simulation settings for one scenario.
struct ScenarioSetup {
  std::vector<PedestrianState> initial;
  std::vector<BoundarySegment> walls;
  SimConfig sim;
  double duration = 0.0;
};

/// Per-scene generator seeded from (seed, index).
std::mt19937_64 scene_rng(std::uint64_t seed, std::uint64_t index);

/// Truncated normal by rejection.
double sample_preferred_speed(const SpeedDistribution& d, std::mt19937_64& rng);

/// Two-pedestrian circle crossings simulated under `generative`. A scene
/// whose rollout fails is skipped and reported under `skipped`.
struct CircleScenes {
  std::vector<Scene> scenes;
  std::vector<std::string> skipped;
};
CircleScenes gen_circle_scenes(std::size_t n_scenes, const PotentialModel& generative, std::uint64_t seed,
                               const SimConfig& sim = SimConfig::inference(), const ScenarioSpec& spec = {});

/// Initial states of circle scene `index` (before simulation).
std::vector<PedestrianState> circle_initial_states(const ScenarioSpec& spec, std::uint64_t seed, std::uint64_t index);

ScenarioSetup gen_corridor(const ScenarioSpec& spec);
ScenarioSetup gen_gate(const ScenarioSpec& spec);
std::vector<PedestrianState> gen_headon(double separation, double lateral_jitter = 0.0, std::uint64_t seed = 0,
                                        double preferred_speed = 1.34);
ScenarioSetup make_setup(const ScenarioSpec& spec);

/// Runs a setup to its duration and packages the observations as a scene.
Scene simulate_setup(const ScenarioSetup& setup, const PotentialModel& model, const std::string& generator,
                     std::uint64_t seed);

}  // namespace socialforce
