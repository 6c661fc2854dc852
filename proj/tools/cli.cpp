#include "cli.hpp"

#include <cmath>
#include <cstdint>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "socialforce/gradcheck.hpp"
#include "socialforce/inference.hpp"
#include "socialforce/io.hpp"
#include "socialforce/log.hpp"
#include "socialforce/scenarios.hpp"

namespace socialforce::cli {

namespace {

using nlohmann::json;

struct Invocation {
  std::string command;
  std::vector<std::string> args;
};

// Records how an output file was produced next to it.
void write_sidecar(const std::string& output, const Invocation& inv, json resolved) {
  json j = {{"command", inv.command}, {"args", inv.args}, {"output", output}, {"resolved", std::move(resolved)}};
  write_text_file(sidecar_path(output), j.dump(1) + "\n");
}

json parse(const std::string& text) { return json::parse(text); }

std::string hex(std::uint64_t v) {
  std::ostringstream ss;
  ss << std::hex << std::setw(16) << std::setfill('0') << v;
  return ss.str();
}

PotentialModel model_or_default(const std::string& path) {
  return path.empty() ? PotentialModel::exponential() : read_model(path);
}

// Scene used by gradcheck and benchmark: one circle crossing under the
// default exponential potential.
Scene probe_scene(std::uint64_t seed) {
  const auto gen = gen_circle_scenes(1, PotentialModel::exponential(), seed);
  if (gen.scenes.empty()) throw std::runtime_error("could not generate the probe scene");
  return gen.scenes.front();
}

struct SimulateArgs {
  std::string scenario;
  std::string model;
  std::string out;
};

int simulate(const SimulateArgs& a, const Invocation& inv, std::ostream& out) {
  const ScenarioSpec spec = read_scenario_spec(a.scenario);
  const PotentialModel model = read_model(a.model);
  std::vector<Scene> scenes;
  json stats = json::array();
  if (spec.kind == ScenarioKind::Circle) {
    const auto gen = gen_circle_scenes(spec.n_scenes, model, spec.seed, SimConfig::inference(), spec);
    scenes = gen.scenes;
    for (const auto& s : gen.skipped) out << s << '\n';
  } else {
    const auto setup = make_setup(spec);
    const auto initial = setup.initial;
    const auto n_obs = static_cast<std::size_t>(std::floor(setup.duration / setup.sim.observation_interval() + 1e-9)) + 1;
    const auto run = rollout(initial, setup.walls, model, setup.sim, n_obs);
    scenes.push_back(make_scene(run, initial, setup.walls, setup.sim, to_string(spec.kind), spec.seed));
    stats.push_back({{"steps", run.stats.steps},
                     {"max_speed_ratio", run.stats.max_speed_ratio},
                     {"speed_clamps", run.stats.speed_clamps},
                     {"force_caps", run.stats.force_caps}});
  }
  write_trajectories(scenes, a.out);
  write_sidecar(a.out, inv,
                {{"scenario", parse(scenario_spec_to_json(spec))},
                 {"model_type", to_string(model.type())},
                 {"model_checksum", hex(model_checksum(model))},
                 {"scenes", scenes.size()},
                 {"stats", stats}});
  out << "wrote " << scenes.size() << " scene(s) to " << a.out << '\n';
  return 0;
}

struct GenArgs {
  std::string kind;
  std::size_t n = 1;
  std::uint64_t seed = 0;
  std::string model;
  std::string out;
  std::size_t pedestrians = 0;
  double duration = 0.0;
};

int gen_scenes(const GenArgs& a, const Invocation& inv, std::ostream& out) {
  ScenarioSpec spec;
  spec.kind = parse_scenario_kind(a.kind);
  spec.seed = a.seed;
  spec.n_pedestrians = a.pedestrians;
  spec.duration = a.duration;
  spec.n_scenes = a.n;
  const PotentialModel model = model_or_default(a.model);
  std::vector<Scene> scenes;
  std::vector<std::string> skipped;
  if (spec.kind == ScenarioKind::Circle) {
    auto gen = gen_circle_scenes(a.n, model, a.seed, SimConfig::inference(), spec);
    scenes = std::move(gen.scenes);
    skipped = std::move(gen.skipped);
  } else {
    for (std::size_t k = 0; k < a.n; ++k) {
      ScenarioSpec s = spec;
      s.seed = a.seed + k;
      scenes.push_back(simulate_setup(make_setup(s), model, to_string(s.kind), s.seed));
    }
  }
  write_trajectories(scenes, a.out);
  write_sidecar(a.out, inv,
                {{"scenario", parse(scenario_spec_to_json(spec))},
                 {"model", parse(model_to_json(model))},
                 {"scenes", scenes.size()},
                 {"skipped", skipped}});
  out << "wrote " << scenes.size() << " scene(s) to " << a.out;
  if (!skipped.empty()) out << " (" << skipped.size() << " skipped)";
  out << '\n';
  return 0;
}

struct TrainArgs {
  std::string scenes;
  std::string model_type;
  std::string init;
  std::string out;
  std::string report;
  std::optional<double> lr;
  std::size_t batch_size = 1;
  std::size_t epochs = 1;
  std::uint64_t seed = 0;
  std::uint64_t ff_seed = 0;
  bool ff_zero_output = false;
  double obs_rate = 2.5;
  std::size_t window = 20;
  std::size_t split_length = 0;
  std::size_t split_stride = 0;
  std::size_t threads = 1;
  std::size_t max_steps = 0;
  bool interacting = false;
  bool grad_checks = false;
};

int train_cmd(const TrainArgs& a, const Invocation& inv, std::ostream& out) {
  const ModelType type = parse_model_type(a.model_type);
  WindowOptions win;
  win.observations = a.window;
  std::vector<Scene> scenes = read_trajectories(a.scenes, a.obs_rate, win);
  if (a.interacting) scenes = filter_interacting(scenes);
  if (scenes.empty()) throw std::runtime_error("no usable scenes in '" + a.scenes + "'");
  if (a.split_length > 0) {
    scenes = split_windows(scenes, a.split_length, a.split_stride > 0 ? a.split_stride : a.split_length - 1);
    if (scenes.empty()) throw std::runtime_error("--split-length is longer than every scene");
  }

  PotentialModel model = [&] {
    switch (type) {
      case ModelType::Exponential: return PotentialModel::exponential();
      case ModelType::Mlp1d: return PotentialModel::mlp1d(a.seed);
      case ModelType::FourierMlp2d: return PotentialModel::ffmlp(a.seed, a.ff_seed, a.ff_zero_output);
      case ModelType::Diamond: return PotentialModel::diamond();
    }
    throw std::logic_error("unreachable");
  }();
  TrainConfig cfg;
  cfg.learning_rate = a.lr.value_or(TrainConfig::default_learning_rate(type));
  cfg.batch_size = a.batch_size;
  cfg.epochs = a.epochs;
  cfg.seed = a.seed;
  cfg.threads = a.threads;
  cfg.max_steps = a.max_steps;
  cfg.gradient_checks = a.grad_checks;
  if (!a.init.empty()) cfg.init_from = a.init;
  const SimConfig sim = SimConfig::inference();

  const TrainReport report = train(scenes, model, sim, cfg);
  write_model(model, a.out);
  const json resolved = {{"scenes_file", a.scenes},
                         {"scenes", scenes.size()},
                         {"obs_rate_hz", a.obs_rate},
                         {"window_observations", a.window},
                         {"split_length", a.split_length},
                         {"split_stride", a.split_stride},
                         {"model_type", to_string(type)},
                         {"ff_seed", a.ff_seed},
                         {"ff_zero_output", a.ff_zero_output},
                         {"interacting_only", a.interacting},
                         {"train", parse(train_config_to_json(cfg))},
                         {"sim", parse(sim_config_to_json(sim))}};
  write_sidecar(a.out, inv, resolved);
  if (!a.report.empty()) {
    write_train_report(report, a.report);
    write_sidecar(a.report, inv, resolved);
  }
  out << "trained " << to_string(type) << " on " << scenes.size() << " scene(s): " << report.steps << " step(s)";
  if (!report.loss_curve.empty()) {
    out << ", loss " << report.loss_curve.front() << " -> " << report.loss_curve.back();
  }
  out << '\n';
  if (report.aborted) {
    out << "aborted: " << report.abort_reason << '\n';
    return 1;
  }
  return 0;
}

struct GradcheckArgs {
  std::string model;
  double tol = 1e-4;
  double eps = 1e-6;
  std::uint64_t seed = 0;
  std::size_t sample = 0;
  std::size_t directions = 4;
};

int gradcheck_cmd(const GradcheckArgs& a, std::ostream& out) {
  const PotentialModel model = read_model(a.model);
  const Scene scene = probe_scene(a.seed);
  GradCheckOptions opt;
  opt.eps = a.eps;
  opt.tol = a.tol;
  opt.seed = a.seed;
  // Every coordinate for the small models; a sample plus directions for ffmlp.
  opt.sample = a.sample > 0 ? a.sample : (model.parameter_count() > 1000 ? 64 : 0);
  opt.directions = model.parameter_count() > 1000 ? a.directions : 0;
  const auto r = grad_check(scene_loss_function(model, scene, SimConfig::inference()), model.params(), opt);
  out << "model " << to_string(model.type()) << ", " << model.parameter_count() << " parameter(s), checked "
      << r.n_checked << '\n'
      << "max relative error " << r.max_rel_err << " at coordinate " << r.worst_coordinate << '\n';
  if (opt.directions > 0) out << "max directional relative error " << r.max_directional_rel_err << '\n';
  out << (r.pass ? "PASS" : "FAIL") << " (tol " << a.tol << ")\n";
  return r.pass ? 0 : 1;
}

struct BenchmarkArgs {
  std::string model;
  std::size_t repeats = 5;
  std::uint64_t seed = 0;
  std::string out;
};

int benchmark_cmd(const BenchmarkArgs& a, const Invocation& inv, std::ostream& out) {
  const PotentialModel model = read_model(a.model);
  const Scene scene = probe_scene(a.seed);
  const auto b = benchmark_gradients(model, scene, SimConfig::inference(), a.repeats);
  const json j = {{"model_type", to_string(model.type())},
                  {"parameters", model.parameter_count()},
                  {"agreement", b.agreement},
                  {"agreement_rel_err", b.agreement_rel_err},
                  {"t_backprop_s", b.t_backprop},
                  {"t_finite_diff_s", b.t_finite_diff},
                  {"t_finite_diff_value_s", b.t_finite_diff_value},
                  {"fd_evaluations", b.fd_evaluations},
                  {"ratio", b.ratio}};
  out << j.dump(1) << '\n';
  if (!a.out.empty()) {
    write_text_file(a.out, j.dump(1) + "\n");
    write_sidecar(a.out, inv, {{"model_checksum", hex(model_checksum(model))}, {"repeats", a.repeats}, {"seed", a.seed}});
  }
  return b.agreement ? 0 : 1;
}

struct ExportArgs {
  std::string model;
  std::string out;
  std::optional<double> x_min, x_max, y_min, y_max;
  std::optional<std::size_t> nx;
  std::size_t ny = 81;
  double speed = 1.34;
};

int export_cmd(const ExportArgs& a, const Invocation& inv, std::ostream& out) {
  const PotentialModel model = read_model(a.model);
  GridRegion r;
  const bool two_d = model.two_dimensional();
  r.x_min = a.x_min.value_or(two_d ? -2.0 : 0.0);
  r.x_max = a.x_max.value_or(2.0);
  r.y_min = a.y_min.value_or(-2.0);
  r.y_max = a.y_max.value_or(2.0);
  r.nx = a.nx.value_or(two_d ? 81 : 201);
  r.ny = a.ny;
  r.walking_speed = a.speed;
  const auto grid = export_potential_grid(model, r);
  write_potential_grid(grid, a.out);
  write_sidecar(a.out, inv,
                {{"model_type", grid.model_type},
                 {"model_checksum", hex(grid.checksum)},
                 {"x_min", r.x_min},
                 {"x_max", r.x_max},
                 {"y_min", r.y_min},
                 {"y_max", r.y_max},
                 {"nx", r.nx},
                 {"ny", two_d ? r.ny : 1},
                 {"walking_speed", r.walking_speed},
                 {"b_stride", r.b_stride}});
  out << "wrote " << grid.values.size() << " grid values to " << a.out << '\n';
  return 0;
}

log::Level parse_level(const std::string& s) {
  if (s == "debug") return log::Level::Debug;
  if (s == "info") return log::Level::Info;
  if (s == "warning") return log::Level::Warning;
  if (s == "error") return log::Level::Error;
  return log::Level::Off;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Differentiable social force simulation and potential learning", "socialforce"};
  app.require_subcommand(1);
  std::string level = "warning";
  app.add_option("--log-level", level, "debug|info|warning|error|off")
      ->check(CLI::IsMember({"debug", "info", "warning", "error", "off"}));

  SimulateArgs sa;
  auto* sim = app.add_subcommand("simulate", "Simulate a scenario file and write trajectories");
  sim->add_option("--scenario", sa.scenario, "Scenario JSON")->required()->check(CLI::ExistingFile);
  sim->add_option("--model", sa.model, "Model JSON")->required()->check(CLI::ExistingFile);
  sim->add_option("--out", sa.out, "Trajectory file to write")->required();

  TrainArgs ta;
  auto* tr = app.add_subcommand("train", "Fit a potential to trajectories by back-propagating through rollouts");
  tr->add_option("--scenes", ta.scenes, "Trajectory file")->required()->check(CLI::ExistingFile);
  tr->add_option("--model-type", ta.model_type, "Potential to fit")
      ->required()
      ->check(CLI::IsMember({"exp", "mlp1d", "ffmlp", "diamond"}));
  tr->add_option("--init", ta.init, "Warm-start model JSON")->check(CLI::ExistingFile);
  tr->add_option("--out", ta.out, "Model JSON to write")->required();
  tr->add_option("--report", ta.report, "Training report JSON to write");
  tr->add_option("--lr", ta.lr, "Learning rate (default depends on the model type)");
  tr->add_option("--batch-size", ta.batch_size)->check(CLI::PositiveNumber);
  tr->add_option("--epochs", ta.epochs);
  tr->add_option("--seed", ta.seed, "Initialization and shuffling seed");
  tr->add_option("--ff-seed", ta.ff_seed, "Fourier frequency seed (ffmlp)");
  tr->add_flag("--ff-zero-output", ta.ff_zero_output, "Start ffmlp from a flat potential");
  tr->add_option("--obs-rate", ta.obs_rate, "Observation rate of the file (Hz)")->check(CLI::PositiveNumber);
  tr->add_option("--window", ta.window, "Observations per scene after the anchor")->check(CLI::PositiveNumber);
  tr->add_option("--split-length", ta.split_length, "Train on sub-windows of this many observations (0: whole scenes)")
      ->check(CLI::Range(std::size_t{0}, std::size_t{100000}));
  tr->add_option("--split-stride", ta.split_stride, "Start a sub-window every this many observations (0: length - 1)");
  tr->add_option("--threads", ta.threads)->check(CLI::PositiveNumber);
  tr->add_option("--max-steps", ta.max_steps, "Stop after this many SGD steps (0: no limit)");
  tr->add_flag("--interacting", ta.interacting, "Keep only scenes with pedestrians within 4 m");
  tr->add_flag("--grad-checks", ta.grad_checks, "Check gradients at the start and the end");

  GradcheckArgs ga;
  auto* gc = app.add_subcommand("gradcheck", "Compare backward gradients with central differences");
  gc->add_option("--model", ga.model, "Model JSON")->required()->check(CLI::ExistingFile);
  gc->add_option("--tol", ga.tol, "Maximum relative error");
  gc->add_option("--eps", ga.eps, "Finite-difference step");
  gc->add_option("--seed", ga.seed, "Probe scene and sampling seed");
  gc->add_option("--sample", ga.sample, "Coordinates to check (0: all, or 64 for large models)");
  gc->add_option("--directions", ga.directions, "Random directions for large models");

  BenchmarkArgs ba;
  auto* bm = app.add_subcommand("benchmark", "Time backward against finite differences");
  bm->add_option("--model", ba.model, "Model JSON")->required()->check(CLI::ExistingFile);
  bm->add_option("--repeats", ba.repeats)->check(CLI::PositiveNumber);
  bm->add_option("--seed", ba.seed, "Probe scene seed");
  bm->add_option("--out", ba.out, "JSON file to write");

  ExportArgs ea;
  auto* ex = app.add_subcommand("export-potential", "Sample a potential on a grid and write CSV");
  ex->add_option("--model", ea.model, "Model JSON")->required()->check(CLI::ExistingFile);
  ex->add_option("--out", ea.out, "CSV to write")->required();
  ex->add_option("--x-min", ea.x_min, "d_par (2-D) or b (1-D) lower bound");
  ex->add_option("--x-max", ea.x_max);
  ex->add_option("--y-min", ea.y_min, "d_perp lower bound (2-D)");
  ex->add_option("--y-max", ea.y_max);
  ex->add_option("--nx", ea.nx)->check(CLI::Range(2, 100000));
  ex->add_option("--ny", ea.ny)->check(CLI::Range(2, 100000));
  ex->add_option("--speed", ea.speed, "Walking speed of the other pedestrian (m/s)");

  GenArgs na;
  auto* gs = app.add_subcommand("gen-scenes", "Generate synthetic scenes");
  gs->add_option("--kind", na.kind)->required()->check(CLI::IsMember({"circle", "corridor", "gate", "headon"}));
  gs->add_option("--n", na.n, "Number of scenes")->check(CLI::PositiveNumber);
  gs->add_option("--seed", na.seed);
  gs->add_option("--model", na.model, "Generative model JSON (default: exponential)")->check(CLI::ExistingFile);
  gs->add_option("--pedestrians", na.pedestrians, "0: the kind's default");
  gs->add_option("--duration", na.duration, "Simulated seconds (0: the kind's default)");
  gs->add_option("--out", na.out, "Trajectory file to write")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n\n";
    const auto subs = app.get_subcommands();
    err << (subs.empty() ? app.help() : subs.front()->help());
    return 2;
  }
  log::set_level(parse_level(level));

  Invocation inv;
  inv.args = args;
  try {
    for (auto* sub : app.get_subcommands()) inv.command = sub->get_name();
    if (*sim) return simulate(sa, inv, out);
    if (*tr) return train_cmd(ta, inv, out);
    if (*gc) return gradcheck_cmd(ga, out);
    if (*bm) return benchmark_cmd(ba, inv, out);
    if (*ex) return export_cmd(ea, inv, out);
    if (*gs) return gen_scenes(na, inv, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  err << app.help();
  return 2;
}

}  // namespace socialforce::cli
