#pragma once

// Social force dynamics: goal attraction, pairwise repulsion from the
// gradient of an interaction potential, wall repulsion, and a two-stage
// leapfrog integrator.
//
// Frames. For the pair (alpha, beta) with d = x_alpha - x_beta:
//   b      semi-minor axis of the ellipse through d with foci 0 and
//          stride * v_beta (beta's actual velocity), so it uses beta's frame;
//   d_par  (x_beta - x_alpha) . e_alpha, positive when beta is ahead;
//   d_perp (x_beta - x_alpha) . rot90(e_alpha), positive when beta is left,
// with e_alpha alpha's heading. The force on alpha is -dV/dx_alpha.
//
// Heading. Inside a rollout e_alpha is part of the state: it starts at the
// walking direction and turns toward v at a rate of |v_perp| / kHeadingTurnLength
// (see turn_heading()), so it follows the direction travelled over the last
// few decimetres and stays put while alpha stands still. Outside a rollout the
// plain-value functions use the walking direction.

#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "socialforce/autodiff.hpp"
#include "socialforce/geometry.hpp"
#include "socialforce/potentials.hpp"

namespace socialforce {

struct PedestrianState {
  Vec2 position;
  Vec2 velocity;
  Vec2 goal;
  double preferred_speed = 1.34;
  double tau = 0.5;

  bool operator==(const PedestrianState&) const = default;
};

struct BoundarySegment {
  Vec2 a;
  Vec2 b;

  bool operator==(const BoundarySegment&) const = default;
};

struct SimConfig {
  double dt = 0.04;
  std::size_t oversampling = 10;
  bool fov_enabled = true;
  double fov_degrees = 200.0;
  double fov_out_weight = 0.5;
  double v_max_factor = 1.3;
  double b_stride = 0.5;
  double wall_u0 = 10.0;
  double wall_r = 0.2;
  double force_cap = 100.0;
  /// Desired speed v0 tanh(|gap| / r) with r this radius, so walkers slow
  /// down smoothly instead of orbiting the goal point. 0 disables it.
  double goal_slowing_radius = 0.0;
  /// Wrap x into [x_min, x_max) after every drift; pair distances use the
  /// nearest periodic image.
  bool periodic_x = false;
  double x_min = 0.0;
  double x_max = 0.0;

  void validate() const;
  /// Settings for generating and fitting training scenes: no view weight
  /// and a 0.5 m slowing radius, so rollouts stay smooth in the parameters.
  static SimConfig inference();
  [[nodiscard]] double observation_interval() const { return dt * static_cast<double>(oversampling); }
};

class SimulationError : public std::runtime_error {
 public:
  static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();
  SimulationError(const std::string& what, std::size_t step, std::size_t pedestrian = npos);
  [[nodiscard]] std::size_t step() const noexcept { return step_; }
  [[nodiscard]] std::size_t pedestrian() const noexcept { return pedestrian_; }

 private:
  std::size_t step_;
  std::size_t pedestrian_;
};

inline constexpr double kStationarySpeed = 1e-4;
inline constexpr double kHeadingTurnLength = 0.3;  // m

// ---------------------------------------------------------------------------
// Plain-value geometry and forces

/// 2b = sqrt((|d| + |d - s e|)^2 - s^2) with s = speed_beta * stride.
double reduced_distance_b(Vec2 d, double speed_beta, Vec2 e_beta, double stride);

struct FrameDistances {
  double d_par = 0.0;
  double d_perp = 0.0;
};
/// (d . e, d . rot90(e)).
FrameDistances decompose_distance(Vec2 d, Vec2 e);

/// Velocity direction, or the goal direction below kStationarySpeed.
/// Initial heading of a rollout, and the frame used by the plain-value functions.
Vec2 walking_direction(const PedestrianState& s);

/// One heading update: normalize(e + dt / L (v - (v . e) e)), L = kHeadingTurnLength.
Vec2 turn_heading(Vec2 e, Vec2 v, double dt);

/// The potential inputs of the pair as seen by alpha.
InteractionInputs interaction_inputs(const PedestrianState& alpha, const PedestrianState& beta, double stride);

/// (v0 e_goal - v) / tau, with the desired speed scaled by tanh(|gap| / r)
/// for a slowing radius r > 0.
Vec2 goal_force(const PedestrianState& s, bool* arrived = nullptr, double slowing_radius = 0.0);
/// Force on alpha from beta, after the cap and (if enabled) the view weight.
Vec2 repulsion_force(const PedestrianState& alpha, const PedestrianState& beta, const PotentialModel& model,
                     const SimConfig& cfg);
/// (U0/R) e^{-r/R} along the outward direction, summed over segments.
Vec2 boundary_force(const PedestrianState& s, std::span<const BoundarySegment> walls, const SimConfig& cfg);
/// Weight applied to a repulsive force f acting on a pedestrian walking along e.
double field_of_view_weight(Vec2 e, Vec2 f, const SimConfig& cfg);

/// First leapfrog stage: v += F dt/2; x += v dt.
void leapfrog_kick_drift(std::span<PedestrianState> states, std::span<const Vec2> forces, double dt);
/// Second stage: v += F dt/2, then |v| <= v_max_factor * v0.
void leapfrog_kick(std::span<PedestrianState> states, std::span<const Vec2> forces, double dt, double v_max_factor);

// ---------------------------------------------------------------------------
// Rollouts

struct RolloutStats {
  std::size_t steps = 0;
  /// max over steps and pedestrians of |v| / v_max after the speed clamp.
  double max_speed_ratio = 0.0;
  std::size_t speed_clamps = 0;
  std::size_t force_caps = 0;
  std::size_t degenerate_ellipses = 0;
  std::vector<bool> arrived;
};

struct RolloutResult {
  /// positions[ped][obs]; observation 0 is the initial state.
  std::vector<std::vector<Vec2>> positions;
  std::vector<std::vector<Vec2>> velocities;
  std::vector<PedestrianState> final_states;
  RolloutStats stats;
};

/// Simulates (n_obs - 1) * oversampling steps without keeping a tape.
RolloutResult rollout(std::span<const PedestrianState> initial, std::span<const BoundarySegment> walls,
                      const PotentialModel& model, const SimConfig& cfg, std::size_t n_obs);

struct TapedRollout {
  std::vector<std::vector<VarVec2>> positions;
  RolloutStats stats;
};

/// Same simulation with every step recorded on `tape`, so the observed
/// positions are differentiable with respect to the bound parameters.
TapedRollout rollout_taped(ad::Tape& tape, const BoundPotential& potential, std::span<const PedestrianState> initial,
                           std::span<const BoundarySegment> walls, const SimConfig& cfg, std::size_t n_obs);

}  // namespace socialforce
