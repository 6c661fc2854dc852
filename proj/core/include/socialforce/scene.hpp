#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "socialforce/dynamics.hpp"
#include "socialforce/geometry.hpp"

namespace socialforce {

/// Synchronized trajectories at a fixed observation rate.
struct Scene {
  /// trajectories[ped][obs]
  std::vector<std::vector<Vec2>> trajectories;
  std::vector<Vec2> goals;
  /// Optional; when empty the speed is estimated from the first two observations.
  std::vector<double> preferred_speeds;
  std::vector<BoundarySegment> walls;
  double obs_interval = 0.4;
  std::string generator;
  std::uint64_t seed = 0;

  [[nodiscard]] std::size_t n_pedestrians() const noexcept { return trajectories.size(); }
  [[nodiscard]] std::size_t n_observations() const noexcept {
    return trajectories.empty() ? 0 : trajectories.front().size();
  }
  /// Uniform lengths, finite positions, one goal per pedestrian.
  void validate() const;

  bool operator==(const Scene&) const = default;
};

/// Initial states anchored on the first two observations: position obs[0],
/// velocity (obs[1] - obs[0]) / obs_interval.
std::vector<PedestrianState> initial_states(const Scene& scene, double tau = 0.5);

/// Scene from a value rollout (observation interval taken from `cfg`).
Scene make_scene(const RolloutResult& run, std::span<const PedestrianState> initial,
                 std::span<const BoundarySegment> walls, const SimConfig& cfg, std::string generator,
                 std::uint64_t seed);

/// Smallest distance between any two pedestrians at a common observation.
double min_pairwise_distance(const Scene& scene);

}  // namespace socialforce
