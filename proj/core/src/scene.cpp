#include "socialforce/scene.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace socialforce {

void Scene::validate() const {
  const std::size_t n_obs = n_observations();
  for (std::size_t i = 0; i < trajectories.size(); ++i) {
    if (trajectories[i].size() != n_obs) {
      throw std::invalid_argument("scene: trajectory " + std::to_string(i) + " has a different length");
    }
    for (const Vec2& p : trajectories[i]) {
      if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
        throw std::invalid_argument("scene: non-finite position in trajectory " + std::to_string(i));
      }
    }
  }
  if (goals.size() != trajectories.size()) throw std::invalid_argument("scene: one goal per pedestrian required");
  if (!preferred_speeds.empty() && preferred_speeds.size() != trajectories.size()) {
    throw std::invalid_argument("scene: preferred speeds must match the pedestrian count");
  }
  if (!(obs_interval > 0.0)) throw std::invalid_argument("scene: observation interval must be positive");
}

std::vector<PedestrianState> initial_states(const Scene& scene, double tau) {
  scene.validate();
  if (scene.n_observations() < 2) throw std::invalid_argument("initial_states: need at least two observations");
  std::vector<PedestrianState> out(scene.n_pedestrians());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto& traj = scene.trajectories[i];
    auto& s = out[i];
    s.position = traj[0];
    s.velocity = (traj[1] - traj[0]) / scene.obs_interval;
    s.goal = scene.goals[i];
    s.tau = tau;
    if (!scene.preferred_speeds.empty()) {
      s.preferred_speed = scene.preferred_speeds[i];
    } else {
      const double speed = norm(s.velocity);
      s.preferred_speed = speed > 0.1 ? speed : 1.34;
    }
  }
  return out;
}

Scene make_scene(const RolloutResult& run, std::span<const PedestrianState> initial,
                 std::span<const BoundarySegment> walls, const SimConfig& cfg, std::string generator,
                 std::uint64_t seed) {
  Scene s;
  s.trajectories = run.positions;
  for (const auto& p : initial) {
    s.goals.push_back(p.goal);
    s.preferred_speeds.push_back(p.preferred_speed);
  }
  s.walls.assign(walls.begin(), walls.end());
  s.obs_interval = cfg.observation_interval();
  s.generator = std::move(generator);
  s.seed = seed;
  return s;
}

double min_pairwise_distance(const Scene& scene) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < scene.n_observations(); ++k) {
    for (std::size_t a = 0; a < scene.n_pedestrians(); ++a) {
      for (std::size_t b = a + 1; b < scene.n_pedestrians(); ++b) {
        best = std::min(best, norm(scene.trajectories[a][k] - scene.trajectories[b][k]));
      }
    }
  }
  return best;
}

}  // namespace socialforce
