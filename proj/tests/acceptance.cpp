// Acceptance runner: one PASS/FAIL line per criterion.
//   acceptance                 all criteria
//   acceptance --criterion N   just N
// Exit status 0 only if every selected criterion passes.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include <CLI11.hpp>

#include "socialforce/inference.hpp"
#include "socialforce/io.hpp"
#include "socialforce/scenarios.hpp"

using namespace socialforce;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// 1 ---------------------------------------------------------------------------

Outcome gradient_correctness() {
  const Scene scene = gen_circle_scenes(1, PotentialModel::exponential(), 11).scenes.at(0);
  const SimConfig sim = SimConfig::inference();
  const PotentialModel models[] = {PotentialModel::exponential(1.8, 0.35), PotentialModel::mlp1d(0),
                                   PotentialModel::ffmlp(0, 0), PotentialModel::diamond()};
  Outcome o{true, ""};
  for (const auto& m : models) {
    GradCheckOptions opt;
    opt.eps = 1e-6;
    opt.tol = 1e-4;
    if (m.parameter_count() > 1000) {
      opt.sample = 64;
      opt.directions = 4;
    }
    const auto t0 = std::chrono::steady_clock::now();
    const auto r = grad_check(scene_loss_function(m, scene, sim), m.params(), opt);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const double err = std::max(r.max_rel_err, r.max_directional_rel_err);
    const bool ok = r.pass && secs < 60.0;
    o.pass = o.pass && ok;
    o.detail += fmt("%s%s %.1e (%zu coords, %.1fs)", o.detail.empty() ? "" : "; ", to_string(m.type()).c_str(), err,
                    r.n_checked, secs);
  }
  return o;
}

// 2 ---------------------------------------------------------------------------

Outcome backprop_speed() {
  const Scene scene = gen_circle_scenes(1, PotentialModel::exponential(), 11).scenes.at(0);
  const auto b = benchmark_gradients(PotentialModel::mlp1d(0), scene, SimConfig::inference(), 5);
  return {b.agreement && b.ratio > 10.0,
          fmt("t_fd/t_bp = %.1f (bp %.2f ms, fd %.2f ms over %zu evaluations, untaped fd %.2f ms, agreement %.1e)",
              b.ratio, 1e3 * b.t_backprop, 1e3 * b.t_finite_diff, b.fd_evaluations, 1e3 * b.t_finite_diff_value,
              b.agreement_rel_err)};
}

// 3 ---------------------------------------------------------------------------

// Training on 8-observation windows (stride 7) of the training scenes, plain
// SGD, best of four initializations by final training loss.
struct FitResult {
  PotentialModel model;
  double train_loss = 0.0;
  std::uint64_t seed = 0;
};

double mean_window_loss(const PotentialModel& m, std::span<const Scene> windows, const SimConfig& sim) {
  double total = 0.0;
  for (const auto& w : windows) total += scene_loss_value(m, w, sim);
  return total / static_cast<double>(windows.size());
}

FitResult fit_multistart(std::span<const Scene> windows, const SimConfig& sim, const TrainConfig& base,
                         const std::function<PotentialModel(std::uint64_t)>& make, std::uint64_t n_starts) {
  FitResult best{make(0), std::numeric_limits<double>::infinity(), 0};
  for (std::uint64_t seed = 0; seed < n_starts; ++seed) {
    PotentialModel m = make(seed);
    TrainConfig cfg = base;
    cfg.seed = seed;
    const auto report = train(windows, m, sim, cfg);
    if (report.aborted) continue;
    double loss = std::numeric_limits<double>::infinity();
    try {
      loss = mean_window_loss(m, windows, sim);
    } catch (const std::exception&) {
    }
    if (loss < best.train_loss) best = {m, loss, seed};
  }
  return best;
}

Outcome potential_recovery() {
  const SimConfig sim = SimConfig::inference();
  const auto all = gen_circle_scenes(50, PotentialModel::exponential(2.1, 0.3), 1, sim).scenes;
  if (all.size() < 50) return {false, fmt("only %zu of 50 scenes generated", all.size())};
  const std::span<const Scene> train_scenes(all.data(), 40);
  const std::span<const Scene> test_scenes(all.data() + 40, 10);
  const auto windows = split_windows(train_scenes, 8, 7);

  TrainConfig cfg;
  cfg.learning_rate = 0.3;
  cfg.batch_size = 1;
  cfg.epochs = 100;
  const auto fit = fit_multistart(windows, sim, cfg, [](std::uint64_t s) { return PotentialModel::mlp1d(s); }, 4);

  const double mde = mean_displacement_error(fit.model, test_scenes, sim);
  bool decreasing = true;
  double prev = fit.model.value({0.2});
  for (int i = 1; i < 50; ++i) {
    const double v = fit.model.value({0.2 + 1.3 * i / 49.0});
    decreasing = decreasing && v < prev;
    prev = v;
  }
  return {mde < 0.05 && decreasing,
          fmt("held-out MDE %.4f m, V strictly decreasing on [0.2, 1.5]: %s (init seed %llu, window loss %.2e)", mde,
              decreasing ? "yes" : "no", static_cast<unsigned long long>(fit.seed), fit.train_loss)};
}

// 4 ---------------------------------------------------------------------------

double mean_asymmetry(const PotentialModel& m) {
  GridRegion r;
  r.x_min = 0.2;
  r.x_max = 1.5;
  r.nx = 27;
  r.y_min = -0.3;
  r.y_max = 0.3;
  r.ny = 2;
  const auto g = export_potential_grid(m, r);
  double total = 0.0;
  for (std::size_t ix = 0; ix < g.x.size(); ++ix) total += g.at(ix, 1) - g.at(ix, 0);
  return total / static_cast<double>(g.x.size());
}

// 4-observation windows (stride 3), batches of 8, plain SGD at lr 0.5 for 30
// epochs then 0.1 for 20, keeping the epoch with the lowest window loss.
Outcome asymmetric_recovery() {
  const SimConfig sim = SimConfig::inference();
  const PotentialModel oracle = PotentialModel::diamond();
  const auto scenes = gen_circle_scenes(40, oracle, 2, sim).scenes;
  const auto windows = split_windows(scenes, 4, 3);
  PotentialModel m = PotentialModel::ffmlp(0, 0, true);
  PotentialModel best = m;
  double best_loss = std::numeric_limits<double>::infinity();
  std::size_t best_epoch = 0;
  TrainConfig cfg;
  cfg.batch_size = 8;
  cfg.epochs = 1;
  for (std::size_t epoch = 0; epoch < 50; ++epoch) {
    cfg.seed = epoch;
    cfg.learning_rate = epoch < 30 ? 0.5 : 0.1;
    train(windows, m, sim, cfg);
    double loss = std::numeric_limits<double>::infinity();
    try {
      loss = mean_window_loss(m, windows, sim);
    } catch (const std::exception&) {
    }
    if (loss < best_loss) {
      best_loss = loss;
      best = m;
      best_epoch = epoch;
    }
  }
  const double want = mean_asymmetry(oracle);
  double got = 0.0;
  try {
    got = mean_asymmetry(best);
  } catch (const std::exception& e) {
    return {false, fmt("learned grid invalid: %s", e.what())};
  }
  const bool same_sign = (want > 0) == (got > 0) && got != 0.0;
  return {same_sign && std::abs(got) > 0.2 * std::abs(want),
          fmt("mean V(d_par, +0.3) - V(d_par, -0.3): learned %.4f, oracle %.4f (ratio %.2f, epoch %zu, window loss "
              "%.2e)",
              got, want, got / want, best_epoch, best_loss)};
}

// 5 ---------------------------------------------------------------------------

double corridor_right_fraction(const PotentialModel& model, std::uint64_t seeds) {
  std::size_t right = 0;
  std::size_t total = 0;
  for (std::uint64_t seed = 0; seed < seeds; ++seed) {
    ScenarioSpec spec;
    spec.kind = ScenarioKind::Corridor;
    spec.n_pedestrians = 16;
    spec.duration = 40.0;
    spec.seed = seed;
    const auto setup = gen_corridor(spec);
    const Scene s = simulate_setup(setup, model, "corridor", seed);
    const double mid = 0.5 * spec.corridor_width;
    for (std::size_t i = 0; i < s.n_pedestrians(); ++i) {
      const double y = s.trajectories[i].back().y;
      const bool rightward = setup.initial[i].goal.x > setup.initial[i].position.x;
      right += rightward ? (y < mid) : (y > mid);
      ++total;
    }
  }
  return static_cast<double>(right) / static_cast<double>(total);
}

Outcome corridor_bias() {
  const double skewed = corridor_right_fraction(PotentialModel::diamond(), 5);
  DiamondShape flat;
  flat.skew = 0.0;
  const double symmetric = corridor_right_fraction(PotentialModel::diamond(flat), 5);
  return {skewed >= 0.8 && symmetric >= 0.35 && symmetric <= 0.65,
          fmt("right half at 40 s: skew 0.4 %.0f%%, skew 0 %.0f%%", 100 * skewed, 100 * symmetric)};
}

// 6 ---------------------------------------------------------------------------

struct HeadonResult {
  bool both_arrived = true;
  double max_arrival_time = 0.0;
  double max_path = 0.0;
  double longest_stall = 0.0;  // seconds of closing speed < 0.2 m/s before passing
  double final_gap = 0.0;
};

HeadonResult run_headon(const PotentialModel& model) {
  const SimConfig sim;
  const auto init = gen_headon(10.0, 0.01, 0);
  const double interval = sim.observation_interval();
  const std::size_t n_obs = static_cast<std::size_t>(std::round(15.0 / interval)) + 1;
  const auto run = rollout(init, {}, model, sim, n_obs);
  HeadonResult out;
  for (std::size_t i = 0; i < 2; ++i) {
    double path = 0.0;
    bool arrived = false;
    for (std::size_t k = 1; k < n_obs && !arrived; ++k) {
      path += norm(run.positions[i][k] - run.positions[i][k - 1]);
      if (norm(run.positions[i][k] - init[i].goal) < 0.25) {
        arrived = true;
        out.max_arrival_time = std::max(out.max_arrival_time, interval * static_cast<double>(k));
        out.max_path = std::max(out.max_path, path);
      }
    }
    out.both_arrived = out.both_arrived && arrived;
  }
  double stall = 0.0;
  for (std::size_t k = 1; k < n_obs; ++k) {
    const Vec2 a0 = run.positions[0][k - 1], b0 = run.positions[1][k - 1];
    const Vec2 a1 = run.positions[0][k], b1 = run.positions[1][k];
    const bool facing = a1.x < b1.x;
    const double closing = (norm(a0 - b0) - norm(a1 - b1)) / interval;
    stall = facing && closing < 0.2 ? stall + interval : 0.0;
    out.longest_stall = std::max(out.longest_stall, stall);
  }
  out.final_gap = norm(run.positions[0].back() - run.positions[1].back());
  return out;
}

Outcome locking() {
  const auto exp = run_headon(PotentialModel::exponential());
  const auto dia = run_headon(PotentialModel::diamond());
  const bool exp_locks = !exp.both_arrived && exp.longest_stall >= 3.0;
  const bool dia_delivers = dia.both_arrived && dia.max_arrival_time <= 15.0 && dia.max_path <= 12.0;
  return {exp_locks && dia_delivers,
          fmt("exponential: arrived %s, longest stall %.1fs; diamond: arrived %s, %.1fs, path %.2f m",
              exp.both_arrived ? "yes" : "no", exp.longest_stall, dia.both_arrived ? "yes" : "no", dia.max_arrival_time,
              dia.max_path)};
}

// 7 ---------------------------------------------------------------------------

Outcome determinism() {
  std::vector<std::string> failed;
  ScenarioSpec spec;
  spec.kind = ScenarioKind::Corridor;
  spec.duration = 20.0;
  spec.seed = 3;
  const auto setup = gen_corridor(spec);
  const PotentialModel models[] = {PotentialModel::exponential(), PotentialModel::mlp1d(1), PotentialModel::ffmlp(1, 2),
                                   PotentialModel::diamond()};
  for (const auto& m : models) {
    if (simulate_setup(setup, m, "c", 3) != simulate_setup(setup, m, "c", 3)) failed.push_back("rollout " + to_string(m.type()));
    if (model_from_json(model_to_json(m)) != m) failed.push_back("json " + to_string(m.type()));
  }
  const auto a = gen_circle_scenes(5, PotentialModel::exponential(), 9).scenes;
  if (a != gen_circle_scenes(5, PotentialModel::exponential(), 9).scenes) failed.push_back("circle scenes");

  const auto dir = std::filesystem::temp_directory_path() / ("sf_accept_" + std::to_string(::getpid()));
  std::filesystem::create_directories(dir);
  const std::string path = (dir / "t.txt").string();
  std::vector<Scene> scenes = a;
  scenes.push_back(simulate_setup(setup, PotentialModel::diamond(), "c", 3));
  write_trajectories(scenes, path);
  auto file_matches = [&] {
    std::ifstream in(path);
    const auto rows = parse_trajectory_rows(in);
    std::size_t r = 0;
    for (const auto& s : scenes) {
      for (std::size_t k = 0; k < s.n_observations(); ++k) {
        for (std::size_t i = 0; i < s.n_pedestrians(); ++i, ++r) {
          if (r >= rows.size() || rows[r].x != s.trajectories[i][k].x || rows[r].y != s.trajectories[i][k].y) return false;
        }
      }
    }
    return r == rows.size();
  };
  if (!file_matches()) failed.push_back("trajectory file");
  std::filesystem::remove_all(dir);
  Outcome o{failed.empty(), ""};
  for (const auto& f : failed) o.detail += (o.detail.empty() ? "mismatch: " : ", ") + f;
  if (o.detail.empty()) o.detail = "rollouts bit-identical; model JSON and trajectory files round-trip exactly";
  return o;
}

// 8 ---------------------------------------------------------------------------

Outcome baselines() {
  std::string detail;
  bool ok = true;
  for (ScenarioKind kind : {ScenarioKind::Corridor, ScenarioKind::Gate}) {
    ScenarioSpec spec;
    spec.kind = kind;
    spec.duration = 120.0;
    spec.seed = 0;
    const auto setup = make_setup(spec);
    const double interval = setup.sim.observation_interval();
    const auto n_obs = static_cast<std::size_t>(std::round(120.0 / interval)) + 1;
    double worst = 0.0;
    bool finite = true;
    std::string error;
    try {
      const auto run = rollout(setup.initial, setup.walls, PotentialModel::exponential(), setup.sim, n_obs);
      for (std::size_t i = 0; i < setup.initial.size(); ++i) {
        const double vmax = setup.sim.v_max_factor * setup.initial[i].preferred_speed;
        for (std::size_t k = 0; k < n_obs; ++k) {
          const Vec2 p = run.positions[i][k], v = run.velocities[i][k];
          finite = finite && std::isfinite(p.x) && std::isfinite(p.y) && std::isfinite(v.x) && std::isfinite(v.y);
          worst = std::max(worst, norm(v) / vmax);
        }
      }
      worst = std::max(worst, run.stats.max_speed_ratio);
    } catch (const std::exception& e) {
      error = e.what();
    }
    const bool pass = error.empty() && finite && worst <= 1.0 + 1e-12;
    ok = ok && pass;
    detail += fmt("%s%s: %s, max |v|/v_max %.4f", detail.empty() ? "" : "; ", to_string(kind).c_str(),
                  error.empty() ? (finite ? "finite" : "NaN") : error.c_str(), worst);
  }
  return {ok, detail + " over 120 s"};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  int only = 0;
  app.add_option("--criterion", only, "Run one criterion (1-8)")->check(CLI::Range(1, 8));
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"gradient correctness", gradient_correctness}, {"back-prop speed", backprop_speed},
      {"potential recovery", potential_recovery},     {"asymmetric recovery", asymmetric_recovery},
      {"corridor right-bias", corridor_bias},         {"locking", locking},
      {"determinism and round-trips", determinism},   {"baseline scenarios", baselines}};

  bool all = true;
  for (std::size_t n = 1; n <= criteria.size(); ++n) {
    if (only != 0 && static_cast<std::size_t>(only) != n) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[n - 1].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cout << "criterion " << n << " " << (o.pass ? "PASS" : "FAIL") << "  " << criteria[n - 1].first << ": "
              << o.detail << fmt("  [%.1fs]", secs) << std::endl;
    all = all && o.pass;
  }
  return all ? 0 : 1;
}
