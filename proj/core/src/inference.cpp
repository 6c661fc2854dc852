#include "socialforce/inference.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>
#include <thread>

#include "socialforce/gradcheck.hpp"
#include "socialforce/io.hpp"
#include "socialforce/log.hpp"

namespace socialforce {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void check_shapes(std::size_t n_ped, std::size_t n_obs, const Scene& observed) {
  if (n_ped != observed.n_pedestrians() || n_ped == 0) {
    throw std::invalid_argument("trajectory_loss: pedestrian count mismatch");
  }
  if (n_obs != observed.n_observations() || n_obs == 0) {
    throw std::invalid_argument("trajectory_loss: observation count mismatch");
  }
}

double l2(std::span<const double> g) {
  double s = 0.0;
  for (double v : g) s += v * v;
  return std::sqrt(s);
}

ad::Var taped_loss(ad::Tape& tape, const BoundPotential& bp, const Scene& scene, const SimConfig& sim, double tau) {
  const auto initial = initial_states(scene, tau);
  const auto run = rollout_taped(tape, bp, initial, scene.walls, sim, scene.n_observations());
  return trajectory_loss(run.positions, scene);
}

}  // namespace

TapeFunction scene_loss_function(const PotentialModel& model, const Scene& scene, const SimConfig& sim, double tau) {
  const SimConfig s = sim_for_scene(sim, scene);
  return [model, scene, s, tau](ad::Tape& tape, std::span<const ad::Var> params) {
    const BoundPotential bp = model.bind_vars(tape, params);
    return taped_loss(tape, bp, scene, s, tau);
  };
}

ad::Var trajectory_loss(const std::vector<std::vector<VarVec2>>& predicted, const Scene& observed) {
  check_shapes(predicted.size(), predicted.empty() ? 0 : predicted.front().size(), observed);
  ad::Var total;
  const std::size_t n_obs = observed.n_observations();
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    if (predicted[i].size() != n_obs) throw std::invalid_argument("trajectory_loss: ragged prediction");
    for (std::size_t k = 0; k < n_obs; ++k) {
      const Vec2 o = observed.trajectories[i][k];
      const ad::Var ex = ad::shift(predicted[i][k].x, -o.x);
      const ad::Var ey = ad::shift(predicted[i][k].y, -o.y);
      const ad::Var sq = ad::square(ex) + ad::square(ey);
      total = total.valid() ? total + sq : sq;
    }
  }
  return total / static_cast<double>(predicted.size() * n_obs);
}

double trajectory_loss(const std::vector<std::vector<Vec2>>& predicted, const Scene& observed) {
  check_shapes(predicted.size(), predicted.empty() ? 0 : predicted.front().size(), observed);
  const std::size_t n_obs = observed.n_observations();
  double total = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    if (predicted[i].size() != n_obs) throw std::invalid_argument("trajectory_loss: ragged prediction");
    for (std::size_t k = 0; k < n_obs; ++k) {
      const Vec2 e = predicted[i][k] - observed.trajectories[i][k];
      total += e.x * e.x + e.y * e.y;
    }
  }
  return total / static_cast<double>(predicted.size() * n_obs);
}

double trajectory_loss(const Scene& predicted, const Scene& observed) {
  return trajectory_loss(predicted.trajectories, observed);
}

bool sgd_step(ParameterSet& params, std::span<const double> grads, double lr) {
  if (grads.size() != params.size()) throw std::invalid_argument("sgd_step: gradient size mismatch");
  for (double g : grads) {
    if (!std::isfinite(g)) return false;
  }
  std::size_t k = 0;
  for (auto& b : params.blocks) {
    for (double& v : b.values) v -= lr * grads[k++];
  }
  return true;
}

SimConfig sim_for_scene(const SimConfig& base, const Scene& scene) {
  SimConfig cfg = base;
  const double ratio = scene.obs_interval / base.dt;
  const double rounded = std::round(ratio);
  if (rounded < 1.0 || std::abs(ratio - rounded) > 1e-6) {
    throw std::invalid_argument("scene observation interval is not a multiple of the integration step");
  }
  cfg.oversampling = static_cast<std::size_t>(rounded);
  return cfg;
}

LossGradient scene_loss_gradient(const PotentialModel& model, const Scene& scene, const SimConfig& sim, double tau) {
  ad::Tape tape;
  const BoundPotential bp = model.bind(tape, true);
  const ad::Var loss = taped_loss(tape, bp, scene, sim_for_scene(sim, scene), tau);
  const auto g = tape.gradient(loss, bp.params());
  return {loss.value(), std::vector<double>(g.flat().begin(), g.flat().end())};
}

double scene_loss(const PotentialModel& model, const Scene& scene, const SimConfig& sim, double tau) {
  ad::Tape tape;
  const BoundPotential bp = model.bind(tape, false);
  return taped_loss(tape, bp, scene, sim_for_scene(sim, scene), tau).value();
}

double scene_loss_value(const PotentialModel& model, const Scene& scene, const SimConfig& sim, double tau) {
  const auto initial = initial_states(scene, tau);
  const auto run = rollout(initial, scene.walls, model, sim_for_scene(sim, scene), scene.n_observations());
  return trajectory_loss(run.positions, scene);
}

double mean_displacement_error(const PotentialModel& model, std::span<const Scene> scenes, const SimConfig& sim,
                               double tau) {
  double total = 0.0;
  std::size_t count = 0;
  for (const auto& scene : scenes) {
    const auto initial = initial_states(scene, tau);
    const auto run = rollout(initial, scene.walls, model, sim_for_scene(sim, scene), scene.n_observations());
    for (std::size_t i = 0; i < scene.n_pedestrians(); ++i) {
      for (std::size_t k = 1; k < scene.n_observations(); ++k) {
        total += norm(run.positions[i][k] - scene.trajectories[i][k]);
        ++count;
      }
    }
  }
  if (count == 0) throw std::invalid_argument("mean_displacement_error: no observations to compare");
  return total / static_cast<double>(count);
}

std::vector<Scene> filter_interacting(std::span<const Scene> scenes, double radius) {
  std::vector<Scene> out;
  for (const auto& s : scenes) {
    if (s.n_pedestrians() >= 2 && min_pairwise_distance(s) < radius) out.push_back(s);
  }
  return out;
}

std::vector<Scene> split_windows(std::span<const Scene> scenes, std::size_t length, std::size_t stride) {
  if (length < 2) throw std::invalid_argument("split_windows: length must be >= 2");
  if (stride < 1) throw std::invalid_argument("split_windows: stride must be >= 1");
  std::vector<Scene> out;
  for (const auto& s : scenes) {
    for (std::size_t k = 0; k + length <= s.n_observations(); k += stride) {
      Scene w = s;
      for (auto& t : w.trajectories) t = std::vector<Vec2>(t.begin() + static_cast<std::ptrdiff_t>(k),
                                                           t.begin() + static_cast<std::ptrdiff_t>(k + length));
      out.push_back(std::move(w));
    }
  }
  return out;
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw std::invalid_argument("TrainConfig: learning_rate must be positive");
  if (batch_size < 1) throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
  if (!(tau > 0.0)) throw std::invalid_argument("TrainConfig: tau must be positive");
  if (threads < 1) throw std::invalid_argument("TrainConfig: threads must be >= 1");
}

double TrainConfig::default_learning_rate(ModelType type) {
  switch (type) {
    case ModelType::Mlp1d: return 0.3;
    case ModelType::FourierMlp2d: return 0.05;
    default: return 0.01;
  }
}

TrainReport train(std::span<const Scene> scenes, PotentialModel& model, const SimConfig& sim, const TrainConfig& cfg) {
  cfg.validate();
  if (scenes.empty()) throw std::invalid_argument("train: no scenes");
  const auto t_start = Clock::now();
  TrainReport report;
  if (cfg.init_from) {
    PotentialModel loaded = read_model(*cfg.init_from);
    if (loaded.type() != model.type()) throw std::invalid_argument("train: warm-start model has a different type");
    model = loaded;
  }
  report.initial_params = model.params();

  auto oracle_check = [&](const PotentialModel& m) {
    GradCheckOptions opt;
    opt.sample = std::min<std::size_t>(m.parameter_count(), 16);
    opt.seed = cfg.seed;
    return grad_check(scene_loss_function(m, scenes.front(), sim, cfg.tau), m.params(), opt).max_rel_err;
  };
  if (cfg.gradient_checks) report.start_check_rel_err = oracle_check(model);

  std::vector<std::size_t> order(scenes.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(cfg.seed);
  double t_grad = 0.0;
  double t_update = 0.0;
  const std::size_t batches_per_epoch = (scenes.size() + cfg.batch_size - 1) / cfg.batch_size;

  for (std::size_t epoch = 0; epoch < cfg.epochs && !report.aborted; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    std::size_t failed_in_epoch = 0;
    double epoch_total = 0.0;
    std::size_t epoch_batches = 0;
    for (std::size_t batch = 0; batch < batches_per_epoch; ++batch) {
      if (cfg.max_steps > 0 && report.steps >= cfg.max_steps) break;
      const std::size_t lo = batch * cfg.batch_size;
      const std::size_t hi = std::min(lo + cfg.batch_size, scenes.size());
      const std::size_t n = hi - lo;

      const auto t0 = Clock::now();
      std::vector<LossGradient> results(n);
      std::vector<std::string> errors(n);
      auto work = [&](std::size_t k) {
        try {
          results[k] = scene_loss_gradient(model, scenes[order[lo + k]], sim, cfg.tau);
        } catch (const std::exception& e) {
          errors[k] = e.what();
        }
      };
      if (cfg.threads > 1 && n > 1) {
        std::vector<std::thread> pool;
        const std::size_t workers = std::min(cfg.threads, n);
        for (std::size_t w = 0; w < workers; ++w) {
          pool.emplace_back([&, w] {
            for (std::size_t k = w; k < n; k += workers) work(k);
          });
        }
        for (auto& t : pool) t.join();
      } else {
        for (std::size_t k = 0; k < n; ++k) work(k);
      }
      t_grad += seconds_since(t0);

      std::string failure;
      for (std::size_t k = 0; k < n; ++k) {
        if (!errors[k].empty()) {
          failure = "epoch " + std::to_string(epoch) + ", batch " + std::to_string(batch) + ", scene " +
                    std::to_string(order[lo + k]) + ": " + errors[k];
          break;
        }
      }
      if (!failure.empty()) {
        ++report.failed_batches;
        ++failed_in_epoch;
        report.failures.push_back(failure);
        log::warning("training batch failed: " + failure);
        continue;
      }

      // Reduction in batch order, so the result does not depend on threading.
      double loss = 0.0;
      std::vector<double> grad(model.parameter_count(), 0.0);
      for (const auto& r : results) {
        loss += r.loss;
        for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += r.gradient[i];
      }
      const double inv = 1.0 / static_cast<double>(n);
      loss *= inv;
      for (double& g : grad) g *= inv;

      const auto t1 = Clock::now();
      ParameterSet next = model.params();
      report.loss_curve.push_back(loss);
      report.grad_norm_curve.push_back(l2(grad));
      ++report.steps;
      epoch_total += loss;
      ++epoch_batches;
      if (!sgd_step(next, grad, cfg.learning_rate)) {
        ++report.skipped_steps;
        log::warning("non-finite gradient; SGD step skipped");
      } else {
        try {
          model.set_params(next);
        } catch (const std::invalid_argument& e) {
          ++report.skipped_steps;
          log::warning(std::string("SGD step rejected: ") + e.what());
        }
      }
      t_update += seconds_since(t1);
    }
    if (epoch_batches > 0) report.epoch_loss.push_back(epoch_total / static_cast<double>(epoch_batches));
    if (2 * failed_in_epoch > batches_per_epoch) {
      report.aborted = true;
      report.abort_reason = "more than half of the batches failed in epoch " + std::to_string(epoch);
      log::error("training aborted: " + report.abort_reason);
    }
    if (cfg.max_steps > 0 && report.steps >= cfg.max_steps) break;
  }

  report.final_params = model.params();
  if (cfg.gradient_checks) report.end_check_rel_err = oracle_check(model);
  report.wall_time["gradients"] = t_grad;
  report.wall_time["updates"] = t_update;
  report.wall_time["total"] = seconds_since(t_start);
  return report;
}

GradientBenchmark benchmark_gradients(const PotentialModel& model, const Scene& scene, const SimConfig& sim,
                                      std::size_t repeats, double eps, double tol) {
  if (model.parameter_count() == 0) throw std::invalid_argument("benchmark_gradients: model has no parameters");
  if (repeats < 1) repeats = 1;
  GradientBenchmark out;
  const std::vector<double> theta = model.params().flat();

  PotentialModel probe = model;
  const ScalarFunction taped = [&](std::span<const double> x) {
    probe.set_flat_params(x);
    return scene_loss(probe, scene, sim);
  };
  const ScalarFunction untaped = [&](std::span<const double> x) {
    probe.set_flat_params(x);
    return scene_loss_value(probe, scene, sim);
  };

  const auto bp = scene_loss_gradient(model, scene, sim);
  const auto fd = finite_difference_gradient(taped, theta, eps);
  for (std::size_t i = 0; i < theta.size(); ++i) {
    out.agreement_rel_err = std::max(out.agreement_rel_err, relative_error(bp.gradient[i], fd[i]));
  }
  out.agreement = out.agreement_rel_err <= tol;
  out.fd_evaluations = 2 * theta.size();
  if (!out.agreement) return out;

  out.t_backprop = out.t_finite_diff = out.t_finite_diff_value = std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < repeats; ++r) {
    auto t0 = Clock::now();
    const auto g = scene_loss_gradient(model, scene, sim);
    out.t_backprop = std::min(out.t_backprop, seconds_since(t0));
    (void)g;
    t0 = Clock::now();
    const auto f = finite_difference_gradient(taped, theta, eps);
    out.t_finite_diff = std::min(out.t_finite_diff, seconds_since(t0));
    (void)f;
    t0 = Clock::now();
    const auto fv = finite_difference_gradient(untaped, theta, eps);
    out.t_finite_diff_value = std::min(out.t_finite_diff_value, seconds_since(t0));
    (void)fv;
  }
  out.ratio = out.t_finite_diff / out.t_backprop;
  return out;
}

}  // namespace socialforce
