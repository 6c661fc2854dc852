#include "socialforce/io.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string_view>

#include "json.hpp"

namespace socialforce {

using nlohmann::json;

namespace {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  auto is_sep = [](char c) { return c == ',' || c == ' ' || c == '\t' || c == '\r'; };
  while (i < line.size()) {
    while (i < line.size() && is_sep(line[i])) ++i;
    const std::size_t start = i;
    while (i < line.size() && !is_sep(line[i])) ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

double parse_double(std::string_view s, std::size_t line) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
    throw FormatError("'" + std::string(s) + "' is not a finite number", line);
  }
  return v;
}

std::int64_t parse_integer(std::string_view s, std::size_t line) {
  std::int64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec == std::errc() && ptr == s.data() + s.size()) return v;
  // TrajNet exports write ids as 12.0.
  const double d = parse_double(s, line);
  if (d != std::floor(d) || std::abs(d) > 9e15) throw FormatError("'" + std::string(s) + "' is not an integer", line);
  return static_cast<std::int64_t>(d);
}

std::ofstream open_for_writing(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  return out;
}

void finish_writing(std::ofstream& out, const std::string& path) {
  out.flush();
  if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

json parse_json(const std::string& text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string(what) + ": " + e.what());
  }
}

// Typed field access with errors that name the key.
template <typename T>
T field(const json& j, const char* key) {
  if (!j.contains(key)) throw FormatError(std::string("missing key '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw FormatError(std::string("key '") + key + "' has the wrong type");
  }
}

template <typename T>
void maybe(const json& j, const char* key, T& target) {
  if (j.contains(key)) target = field<T>(j, key);
}

void reject_unknown(const json& j, std::initializer_list<const char*> known, const char* what) {
  if (!j.is_object()) throw FormatError(std::string(what) + " must be a JSON object");
  for (const auto& [k, v] : j.items()) {
    if (std::find_if(known.begin(), known.end(), [&](const char* n) { return k == n; }) == known.end()) {
      throw FormatError(std::string(what) + ": unknown key '" + k + "'");
    }
  }
}

json params_to_json(const ParameterSet& p) {
  json blocks = json::array();
  for (const auto& b : p.blocks) {
    blocks.push_back({{"name", b.name}, {"shape", {b.rows, b.cols}}, {"values", b.values}});
  }
  return blocks;
}

json sim_json(const SimConfig& c) {
  return {{"dt", c.dt},
          {"oversampling", c.oversampling},
          {"fov_enabled", c.fov_enabled},
          {"fov_degrees", c.fov_degrees},
          {"fov_out_weight", c.fov_out_weight},
          {"v_max_factor", c.v_max_factor},
          {"b_stride", c.b_stride},
          {"wall_u0", c.wall_u0},
          {"wall_r", c.wall_r},
          {"force_cap", c.force_cap},
          {"periodic_x", c.periodic_x},
          {"x_min", c.x_min},
          {"x_max", c.x_max}};
}

}  // namespace

// ---------------------------------------------------------------------------
// Trajectories

std::vector<TrajectoryRow> parse_trajectory_rows(std::istream& in) {
  std::vector<TrajectoryRow> rows;
  std::set<std::pair<std::int64_t, std::int64_t>> seen;
  std::map<std::int64_t, std::int64_t> last_frame;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view(line);
    if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    const auto fields = split_fields(view);
    if (fields.empty()) continue;
    if (fields.size() != 4) {
      throw FormatError("expected 4 fields (frame, pedestrian, x, y), got " + std::to_string(fields.size()), line_no);
    }
    TrajectoryRow r{parse_integer(fields[0], line_no), parse_integer(fields[1], line_no),
                    parse_double(fields[2], line_no), parse_double(fields[3], line_no)};
    if (!seen.insert({r.frame, r.pedestrian}).second) {
      throw FormatError("duplicate row for frame " + std::to_string(r.frame) + ", pedestrian " +
                            std::to_string(r.pedestrian),
                        line_no);
    }
    const auto it = last_frame.find(r.pedestrian);
    if (it != last_frame.end() && r.frame <= it->second) {
      throw FormatError("frames of pedestrian " + std::to_string(r.pedestrian) + " must increase", line_no);
    }
    last_frame[r.pedestrian] = r.frame;
    rows.push_back(r);
  }
  if (in.bad()) throw std::runtime_error("read error");

  std::set<std::int64_t> frames;
  for (const auto& r : rows) frames.insert(r.frame);
  if (frames.size() > 2) {
    const std::int64_t stride = *std::next(frames.begin()) - *frames.begin();
    for (auto it = std::next(frames.begin()); it != frames.end(); ++it) {
      if (*it - *std::prev(it) != stride) {
        throw FormatError("non-constant frame stride: " + std::to_string(*std::prev(it)) + " -> " +
                          std::to_string(*it) + ", expected " + std::to_string(stride));
      }
    }
  }
  return rows;
}

std::vector<Scene> scenes_from_rows(std::span<const TrajectoryRow> rows, double obs_rate_hz,
                                    const WindowOptions& opts) {
  if (!(obs_rate_hz > 0.0)) throw std::invalid_argument("observation rate must be positive");
  if (opts.observations < 1) throw std::invalid_argument("windows need at least one observation after the anchor");
  std::map<std::int64_t, std::map<std::int64_t, Vec2>> by_frame;
  for (const auto& r : rows) by_frame[r.frame][r.pedestrian] = {r.x, r.y};
  std::vector<std::int64_t> frames;
  for (const auto& [f, peds] : by_frame) frames.push_back(f);

  const double interval = 1.0 / obs_rate_hz;
  const std::size_t span = opts.observations + 1;
  std::vector<Scene> scenes;
  for (std::size_t start = 0; start + span <= frames.size(); start += span) {
    std::vector<std::int64_t> present;
    for (const auto& [ped, pos] : by_frame[frames[start]]) present.push_back(ped);
    for (std::size_t k = start + 1; k < start + span && !present.empty(); ++k) {
      const auto& here = by_frame[frames[k]];
      std::erase_if(present, [&](std::int64_t p) { return !here.contains(p); });
    }
    if (present.empty()) continue;
    Scene s;
    s.obs_interval = interval;
    s.generator = "file";
    for (auto ped : present) {
      std::vector<Vec2> traj;
      traj.reserve(span);
      for (std::size_t k = start; k < start + span; ++k) traj.push_back(by_frame[frames[k]].at(ped));
      const Vec2 last = traj.back();
      const Vec2 velocity = (last - traj[traj.size() - 2]) / interval;
      s.goals.push_back(last + opts.goal_horizon * velocity);
      s.trajectories.push_back(std::move(traj));
    }
    scenes.push_back(std::move(s));
  }
  return scenes;
}

std::vector<Scene> read_trajectories(const std::string& path, double obs_rate_hz, const WindowOptions& opts) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  try {
    const auto rows = parse_trajectory_rows(in);
    return scenes_from_rows(rows, obs_rate_hz, opts);
  } catch (const FormatError& e) {
    throw FormatError(path + ": " + e.what());
  }
}

void write_trajectories(std::span<const Scene> scenes, std::ostream& out) {
  std::int64_t frame0 = 0;
  std::int64_t ped0 = 0;
  for (const auto& s : scenes) {
    s.validate();
    for (std::size_t k = 0; k < s.n_observations(); ++k) {
      for (std::size_t i = 0; i < s.n_pedestrians(); ++i) {
        const Vec2 p = s.trajectories[i][k];
        out << frame0 + static_cast<std::int64_t>(k) << ' ' << ped0 + static_cast<std::int64_t>(i) << ' '
            << format_double(p.x) << ' ' << format_double(p.y) << '\n';
      }
    }
    frame0 += static_cast<std::int64_t>(s.n_observations());
    ped0 += static_cast<std::int64_t>(s.n_pedestrians());
  }
}

void write_trajectories(std::span<const Scene> scenes, const std::string& path) {
  auto out = open_for_writing(path);
  write_trajectories(scenes, static_cast<std::ostream&>(out));
  finish_writing(out, path);
}

// ---------------------------------------------------------------------------
// Models

std::string model_to_json(const PotentialModel& model) {
  json j = {{"model_type", to_string(model.type())}, {"params", params_to_json(model.params())}};
  if (model.type() == ModelType::FourierMlp2d) {
    j["ff_seed"] = model.ff_seed();
    j["ff_freqs"] = model.ff_freqs();
  }
  return j.dump(1);
}

PotentialModel model_from_json(const std::string& text) {
  const json j = parse_json(text, "model");
  reject_unknown(j, {"model_type", "params", "ff_seed", "ff_freqs"}, "model");
  ModelType type{};
  try {
    type = parse_model_type(field<std::string>(j, "model_type"));
  } catch (const std::invalid_argument& e) {
    throw FormatError(e.what());
  }
  const json& blocks = j.at("params");
  if (!blocks.is_array()) throw FormatError("'params' must be an array");
  ParameterSet params;
  for (const auto& b : blocks) {
    reject_unknown(b, {"name", "shape", "values"}, "parameter block");
    const auto shape = field<std::vector<std::size_t>>(b, "shape");
    if (shape.size() != 2) throw FormatError("parameter shape must have two entries");
    params.blocks.push_back({field<std::string>(b, "name"), shape[0], shape[1], field<std::vector<double>>(b, "values")});
  }
  std::uint64_t ff_seed = 0;
  std::vector<double> ff_freqs;
  maybe(j, "ff_seed", ff_seed);
  maybe(j, "ff_freqs", ff_freqs);
  try {
    return PotentialModel::from_parts(type, std::move(params), ff_seed, std::move(ff_freqs));
  } catch (const std::invalid_argument& e) {
    throw FormatError(e.what());
  }
}

void write_model(const PotentialModel& model, const std::string& path) { write_text_file(path, model_to_json(model) + "\n"); }

PotentialModel read_model(const std::string& path) {
  try {
    return model_from_json(read_text_file(path));
  } catch (const FormatError& e) {
    throw FormatError(path + ": " + e.what());
  }
}

std::uint64_t model_checksum(const PotentialModel& model) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : model_to_json(model)) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

// ---------------------------------------------------------------------------
// Potential grids

InteractionInputs grid_inputs(double d_par, double d_perp, const GridRegion& region) {
  PedestrianState observer;
  observer.velocity = {region.walking_speed, 0.0};
  observer.goal = {1e3, 0.0};
  PedestrianState other;
  other.position = {d_par, d_perp};
  other.velocity = {-region.walking_speed, 0.0};
  InteractionInputs in = interaction_inputs(observer, other, region.b_stride);
  // the grid axes are the frame coordinates themselves
  in.d_par = d_par;
  in.d_perp = d_perp;
  return in;
}

PotentialGrid export_potential_grid(const PotentialModel& model, const GridRegion& region) {
  const bool two_d = model.two_dimensional();
  if (region.nx < 2 || (two_d && region.ny < 2)) throw std::invalid_argument("grid resolution must be >= 2 per axis");
  if (!(region.x_max > region.x_min) || (two_d && !(region.y_max > region.y_min))) {
    throw std::invalid_argument("grid region must have positive extent");
  }
  auto axis = [](double lo, double hi, std::size_t n) {
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    v.back() = hi;
    return v;
  };
  PotentialGrid g;
  g.model_type = to_string(model.type());
  g.checksum = model_checksum(model);
  g.two_dimensional = two_d;
  g.x = axis(region.x_min, region.x_max, region.nx);
  if (two_d) {
    g.y = axis(region.y_min, region.y_max, region.ny);
    g.walking_speed = region.walking_speed;
  }

  // One tape for the whole grid; rewound after every node.
  ad::Tape tape;
  const BoundPotential bp = model.bind(tape, false);
  const auto mark = tape.mark();
  auto eval = [&](const InteractionInputs& in) {
    tape.rewind(mark);
    return bp.evaluate({tape.constant(in.b), tape.constant(in.d_perp), tape.constant(in.d_par)}).value();
  };
  const std::size_t ny = two_d ? g.y.size() : 1;
  g.values.reserve(ny * g.x.size());
  for (std::size_t iy = 0; iy < ny; ++iy) {
    for (double x : g.x) {
      const double v = two_d ? eval(grid_inputs(x, g.y[iy], region)) : eval({x, 0.0, 0.0});
      if (!std::isfinite(v) || !(v > 0.0)) {
        throw std::runtime_error("potential is not finite and positive at grid node " + format_double(x));
      }
      g.values.push_back(v);
    }
  }
  return g;
}

void write_potential_grid(const PotentialGrid& g, std::ostream& out) {
  char checksum[24];
  std::snprintf(checksum, sizeof checksum, "%016llx", static_cast<unsigned long long>(g.checksum));
  out << "# model_type " << g.model_type << '\n' << "# checksum " << checksum << '\n';
  if (g.two_dimensional) {
    out << "# axes d_par d_perp" << '\n'
        << "# walking_speed " << format_double(g.walking_speed) << '\n'
        << "# nx " << g.x.size() << " ny " << g.y.size() << '\n'
        << "d_par,d_perp,V\n";
    for (std::size_t iy = 0; iy < g.y.size(); ++iy) {
      for (std::size_t ix = 0; ix < g.x.size(); ++ix) {
        out << format_double(g.x[ix]) << ',' << format_double(g.y[iy]) << ',' << format_double(g.at(ix, iy)) << '\n';
      }
    }
  } else {
    out << "# axes b" << '\n' << "# nx " << g.x.size() << '\n' << "b,V\n";
    for (std::size_t ix = 0; ix < g.x.size(); ++ix) {
      out << format_double(g.x[ix]) << ',' << format_double(g.values[ix]) << '\n';
    }
  }
}

void write_potential_grid(const PotentialGrid& grid, const std::string& path) {
  auto out = open_for_writing(path);
  write_potential_grid(grid, static_cast<std::ostream&>(out));
  finish_writing(out, path);
}

PotentialGrid read_potential_grid(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  PotentialGrid g;
  std::string line;
  std::size_t line_no = 0;
  std::size_t nx = 0;
  std::size_t ny = 0;
  std::vector<std::array<double, 3>> nodes;
  bool header_row = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream h(line.substr(1));
      std::string key;
      h >> key;
      if (key == "model_type") {
        h >> g.model_type;
      } else if (key == "checksum") {
        std::string hex;
        h >> hex;
        g.checksum = std::stoull(hex, nullptr, 16);
      } else if (key == "axes") {
        std::string a;
        std::size_t n = 0;
        while (h >> a) ++n;
        g.two_dimensional = n == 2;
      } else if (key == "walking_speed") {
        h >> g.walking_speed;
      } else if (key == "nx") {
        h >> nx;
        std::string k2;
        if (h >> k2 && k2 == "ny") h >> ny;
      }
      continue;
    }
    if (!header_row) {
      header_row = true;
      continue;
    }
    const auto fields = split_fields(line);
    if (fields.size() != (g.two_dimensional ? 3u : 2u)) throw FormatError("wrong number of grid columns", line_no);
    std::array<double, 3> node{};
    for (std::size_t i = 0; i < fields.size(); ++i) node[i] = parse_double(fields[i], line_no);
    nodes.push_back(node);
  }
  if (!g.two_dimensional) ny = 1;
  if (nx < 2 || nodes.size() != nx * ny) throw FormatError(path + ": grid is not rectangular");
  for (std::size_t ix = 0; ix < nx; ++ix) g.x.push_back(nodes[ix][0]);
  if (g.two_dimensional) {
    for (std::size_t iy = 0; iy < ny; ++iy) g.y.push_back(nodes[iy * nx][1]);
  }
  for (const auto& n : nodes) g.values.push_back(g.two_dimensional ? n[2] : n[1]);
  return g;
}

// ---------------------------------------------------------------------------
// Configs and reports

std::string sim_config_to_json(const SimConfig& cfg) { return sim_json(cfg).dump(1); }

SimConfig sim_config_from_json(const std::string& text) {
  const json j = parse_json(text, "sim config");
  reject_unknown(j,
                 {"dt", "oversampling", "fov_enabled", "fov_degrees", "fov_out_weight", "v_max_factor", "b_stride",
                  "wall_u0", "wall_r", "force_cap", "periodic_x", "x_min", "x_max"},
                 "sim config");
  SimConfig c;
  maybe(j, "dt", c.dt);
  maybe(j, "oversampling", c.oversampling);
  maybe(j, "fov_enabled", c.fov_enabled);
  maybe(j, "fov_degrees", c.fov_degrees);
  maybe(j, "fov_out_weight", c.fov_out_weight);
  maybe(j, "v_max_factor", c.v_max_factor);
  maybe(j, "b_stride", c.b_stride);
  maybe(j, "wall_u0", c.wall_u0);
  maybe(j, "wall_r", c.wall_r);
  maybe(j, "force_cap", c.force_cap);
  maybe(j, "periodic_x", c.periodic_x);
  maybe(j, "x_min", c.x_min);
  maybe(j, "x_max", c.x_max);
  c.validate();
  return c;
}

std::string scenario_spec_to_json(const ScenarioSpec& s) {
  const json j = {{"kind", to_string(s.kind)},
                  {"n_pedestrians", s.n_pedestrians},
                  {"duration", s.duration},
                  {"seed", s.seed},
                  {"tau", s.tau},
                  {"speeds",
                   {{"mean", s.speeds.mean},
                    {"stddev", s.speeds.stddev},
                    {"min", s.speeds.min},
                    {"max", s.speeds.max},
                    {"identical", s.speeds.identical}}},
                  {"n_scenes", s.n_scenes},
                  {"circle_observations", s.circle_observations},
                  {"circle_radius", s.circle_radius},
                  {"angle_min", s.angle_min},
                  {"angle_max", s.angle_max},
                  {"corridor_length", s.corridor_length},
                  {"corridor_width", s.corridor_width},
                  {"spawn_depth", s.spawn_depth},
                  {"min_spawn_distance", s.min_spawn_distance},
                  {"gate_width", s.gate_width},
                  {"gate_half_height", s.gate_half_height},
                  {"gate_spawn_min", s.gate_spawn_min},
                  {"gate_spawn_max", s.gate_spawn_max},
                  {"gate_spawn_half_height", s.gate_spawn_half_height},
                  {"gate_goal_distance", s.gate_goal_distance},
                  {"separation", s.separation},
                  {"lateral_jitter", s.lateral_jitter}};
  return j.dump(1);
}

ScenarioSpec scenario_spec_from_json(const std::string& text) {
  const json j = parse_json(text, "scenario");
  reject_unknown(j,
                 {"kind", "n_pedestrians", "duration", "seed", "tau", "speeds", "n_scenes", "circle_observations",
                  "circle_radius", "angle_min", "angle_max", "corridor_length", "corridor_width", "spawn_depth",
                  "min_spawn_distance", "gate_width", "gate_half_height", "gate_spawn_min", "gate_spawn_max",
                  "gate_spawn_half_height", "gate_goal_distance", "separation", "lateral_jitter"},
                 "scenario");
  ScenarioSpec s;
  try {
    s.kind = parse_scenario_kind(field<std::string>(j, "kind"));
  } catch (const std::invalid_argument& e) {
    throw FormatError(e.what());
  }
  maybe(j, "n_pedestrians", s.n_pedestrians);
  maybe(j, "duration", s.duration);
  maybe(j, "seed", s.seed);
  maybe(j, "tau", s.tau);
  if (j.contains("speeds")) {
    const json& sp = j.at("speeds");
    reject_unknown(sp, {"mean", "stddev", "min", "max", "identical"}, "speeds");
    maybe(sp, "mean", s.speeds.mean);
    maybe(sp, "stddev", s.speeds.stddev);
    maybe(sp, "min", s.speeds.min);
    maybe(sp, "max", s.speeds.max);
    maybe(sp, "identical", s.speeds.identical);
  }
  maybe(j, "n_scenes", s.n_scenes);
  maybe(j, "circle_observations", s.circle_observations);
  maybe(j, "circle_radius", s.circle_radius);
  maybe(j, "angle_min", s.angle_min);
  maybe(j, "angle_max", s.angle_max);
  maybe(j, "corridor_length", s.corridor_length);
  maybe(j, "corridor_width", s.corridor_width);
  maybe(j, "spawn_depth", s.spawn_depth);
  maybe(j, "min_spawn_distance", s.min_spawn_distance);
  maybe(j, "gate_width", s.gate_width);
  maybe(j, "gate_half_height", s.gate_half_height);
  maybe(j, "gate_spawn_min", s.gate_spawn_min);
  maybe(j, "gate_spawn_max", s.gate_spawn_max);
  maybe(j, "gate_spawn_half_height", s.gate_spawn_half_height);
  maybe(j, "gate_goal_distance", s.gate_goal_distance);
  maybe(j, "separation", s.separation);
  maybe(j, "lateral_jitter", s.lateral_jitter);
  try {
    s.validate();
  } catch (const std::invalid_argument& e) {
    throw FormatError(e.what());
  }
  return s;
}

ScenarioSpec read_scenario_spec(const std::string& path) {
  try {
    return scenario_spec_from_json(read_text_file(path));
  } catch (const FormatError& e) {
    throw FormatError(path + ": " + e.what());
  }
}

std::string train_config_to_json(const TrainConfig& c) {
  json j = {{"learning_rate", c.learning_rate}, {"batch_size", c.batch_size},
            {"epochs", c.epochs},               {"seed", c.seed},
            {"tau", c.tau},                     {"threads", c.threads},
            {"max_steps", c.max_steps},         {"gradient_checks", c.gradient_checks}};
  j["init_from"] = c.init_from ? json(*c.init_from) : json(nullptr);
  return j.dump(1);
}

std::string train_report_to_json(const TrainReport& r) {
  json j = {{"steps", r.steps},
            {"skipped_steps", r.skipped_steps},
            {"failed_batches", r.failed_batches},
            {"failures", r.failures},
            {"aborted", r.aborted},
            {"abort_reason", r.abort_reason},
            {"loss_curve", r.loss_curve},
            {"grad_norm_curve", r.grad_norm_curve},
            {"epoch_loss", r.epoch_loss},
            {"initial_params", params_to_json(r.initial_params)},
            {"final_params", params_to_json(r.final_params)},
            {"wall_time_s", r.wall_time}};
  j["start_check_rel_err"] = r.start_check_rel_err ? json(*r.start_check_rel_err) : json(nullptr);
  j["end_check_rel_err"] = r.end_check_rel_err ? json(*r.end_check_rel_err) : json(nullptr);
  return j.dump(1);
}

void write_train_report(const TrainReport& report, const std::string& path) {
  write_text_file(path, train_report_to_json(report) + "\n");
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  auto out = open_for_writing(path);
  out << text;
  finish_writing(out, path);
}

std::string sidecar_path(const std::string& output) { return output + ".config.json"; }

}  // namespace socialforce
