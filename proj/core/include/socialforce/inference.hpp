#pragma once

// Trajectory loss, plain SGD, and the training loop that back-propagates the
// loss through whole rollouts.

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "socialforce/autodiff.hpp"
#include "socialforce/dynamics.hpp"
#include "socialforce/gradcheck.hpp"
#include "socialforce/potentials.hpp"
#include "socialforce/scene.hpp"

namespace socialforce {

/// Mean over pedestrians and observations of the squared position error (m²).
ad::Var trajectory_loss(const std::vector<std::vector<VarVec2>>& predicted, const Scene& observed);
double trajectory_loss(const std::vector<std::vector<Vec2>>& predicted, const Scene& observed);
double trajectory_loss(const Scene& predicted, const Scene& observed);

/// θ ← θ − lr·g. Returns false, leaving θ untouched, if any g is non-finite.
bool sgd_step(ParameterSet& params, std::span<const double> grads, double lr);

/// `base` with the oversampling that matches the scene's observation interval.
SimConfig sim_for_scene(const SimConfig& base, const Scene& scene);

struct LossGradient {
  double loss = 0.0;
  std::vector<double> gradient;  // flat, in parameter order
};

/// Re-simulates `scene` from its anchored initial conditions on a tape and
/// returns the loss and its gradient with respect to every model parameter.
LossGradient scene_loss_gradient(const PotentialModel& model, const Scene& scene, const SimConfig& sim,
                                 double tau = 0.5);
/// The scene loss as a function of the model's parameter blocks, for grad_check.
TapeFunction scene_loss_function(const PotentialModel& model, const Scene& scene, const SimConfig& sim,
                                 double tau = 0.5);
/// The same forward computation without the backward sweep.
double scene_loss(const PotentialModel& model, const Scene& scene, const SimConfig& sim, double tau = 0.5);
/// Loss from a value-mode rollout (no tape kept).
double scene_loss_value(const PotentialModel& model, const Scene& scene, const SimConfig& sim, double tau = 0.5);

/// Mean Euclidean distance between re-simulated and observed positions over
/// all pedestrians and all observations after the first.
double mean_displacement_error(const PotentialModel& model, std::span<const Scene> scenes, const SimConfig& sim,
                               double tau = 0.5);

/// Drops scenes where no two pedestrians ever come within `radius` metres.
std::vector<Scene> filter_interacting(std::span<const Scene> scenes, double radius = 4.0);

/// Sub-scenes of `length` observations starting every `stride` observations.
/// Each one is re-anchored on its own first two observations when simulated,
/// so a training loss over windows never integrates longer than `length`.
std::vector<Scene> split_windows(std::span<const Scene> scenes, std::size_t length, std::size_t stride);

struct TrainConfig {
  double learning_rate = 0.3;
  std::size_t batch_size = 1;
  std::size_t epochs = 1;
  std::uint64_t seed = 0;
  std::optional<std::string> init_from;
  double tau = 0.5;
  /// Scenes of one batch evaluated concurrently on separate tapes.
  std::size_t threads = 1;
  /// Stop after this many SGD steps; 0 means no limit.
  std::size_t max_steps = 0;
  /// Compare backward against finite differences at the start and the end.
  bool gradient_checks = false;

  void validate() const;
  static double default_learning_rate(ModelType type);
};

struct TrainReport {
  std::vector<double> loss_curve;  // batch-mean loss for every executed step
  std::vector<double> grad_norm_curve;
  std::vector<double> epoch_loss;
  ParameterSet initial_params;
  ParameterSet final_params;
  std::map<std::string, double> wall_time;  // seconds per phase
  std::size_t steps = 0;
  std::size_t skipped_steps = 0;  // non-finite gradients
  std::size_t failed_batches = 0;
  std::vector<std::string> failures;
  bool aborted = false;
  std::string abort_reason;
  std::optional<double> start_check_rel_err;
  std::optional<double> end_check_rel_err;
};

/// Minibatch SGD over `scenes`, updating `model` in place. Scenes are
/// shuffled every epoch with a generator seeded from cfg.seed.
TrainReport train(std::span<const Scene> scenes, PotentialModel& model, const SimConfig& sim, const TrainConfig& cfg);

struct GradientBenchmark {
  double t_backprop = 0.0;
  double t_finite_diff = 0.0;
  double ratio = 0.0;
  std::size_t fd_evaluations = 0;
  double agreement_rel_err = 0.0;
  bool agreement = false;
  /// Finite differences driven by the cheaper tape-free rollout, for reference.
  double t_finite_diff_value = 0.0;
};

/// Times one full loss gradient by backward and by central differences
/// (best of `repeats`). Both paths run the same taped forward computation;
/// the agreement check runs before any timing.
GradientBenchmark benchmark_gradients(const PotentialModel& model, const Scene& scene, const SimConfig& sim,
                                      std::size_t repeats = 5, double eps = 1e-6, double tol = 1e-4);

}  // namespace socialforce
