#pragma once

// File formats.
//
// Trajectories: one row per (frame, pedestrian): `frame ped x y`, separated by
// whitespace or commas; `#` starts a comment. Models, reports and configs are
// JSON. Potential grids are CSV with a `#` header.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "socialforce/dynamics.hpp"
#include "socialforce/inference.hpp"
#include "socialforce/potentials.hpp"
#include "socialforce/scenarios.hpp"
#include "socialforce/scene.hpp"

namespace socialforce {

/// Parse and format errors. `line` is 1-based, 0 when not tied to a line.
class FormatError : public std::runtime_error {
 public:
  FormatError(const std::string& what, std::size_t line = 0)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  [[nodiscard]] std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

struct TrajectoryRow {
  std::int64_t frame = 0;
  std::int64_t pedestrian = 0;
  double x = 0.0;
  double y = 0.0;

  bool operator==(const TrajectoryRow&) const = default;
};

/// Rows in file order. Checks (frame, pedestrian) uniqueness, increasing
/// frames per pedestrian and one frame stride for the whole file.
std::vector<TrajectoryRow> parse_trajectory_rows(std::istream& in);

struct WindowOptions {
  /// Observations per scene after the anchor, so a window spans observations + 1 frames.
  std::size_t observations = 20;
  /// Goals sit this many seconds ahead along the terminal velocity.
  double goal_horizon = 2.0;
};

/// Cuts rows into consecutive non-overlapping windows. A window keeps the
/// pedestrians present at every one of its frames and is dropped if none.
std::vector<Scene> scenes_from_rows(std::span<const TrajectoryRow> rows, double obs_rate_hz,
                                    const WindowOptions& opts = {});

std::vector<Scene> read_trajectories(const std::string& path, double obs_rate_hz = 2.5,
                                     const WindowOptions& opts = {});

/// Frames count up from 0 across scenes and pedestrian ids are offset per
/// scene, so every scene occupies its own block of rows.
void write_trajectories(std::span<const Scene> scenes, std::ostream& out);
void write_trajectories(std::span<const Scene> scenes, const std::string& path);

std::string model_to_json(const PotentialModel& model);
PotentialModel model_from_json(const std::string& text);
void write_model(const PotentialModel& model, const std::string& path);
PotentialModel read_model(const std::string& path);

/// FNV-1a over the canonical model JSON.
std::uint64_t model_checksum(const PotentialModel& model);

struct GridRegion {
  // 2-D models: x is d_par, y is d_perp. 1-D models sample b along x only.
  double x_min = -2.0;
  double x_max = 2.0;
  double y_min = -2.0;
  double y_max = 2.0;
  std::size_t nx = 81;
  std::size_t ny = 81;
  /// The observed pedestrian walks head-on towards the observer at this speed.
  double walking_speed = 1.34;
  double b_stride = 0.5;
};

struct PotentialGrid {
  std::string model_type;
  std::uint64_t checksum = 0;
  bool two_dimensional = false;
  std::vector<double> x;
  std::vector<double> y;  // empty for 1-D grids
  /// values[iy * x.size() + ix]
  std::vector<double> values;
  double walking_speed = 0.0;

  [[nodiscard]] double at(std::size_t ix, std::size_t iy = 0) const { return values.at(iy * x.size() + ix); }
  bool operator==(const PotentialGrid&) const = default;
};

/// Interaction inputs at a 2-D grid node (d_par, d_perp): the observer at the
/// origin walks along +x, the other pedestrian walks along -x.
InteractionInputs grid_inputs(double d_par, double d_perp, const GridRegion& region);

PotentialGrid export_potential_grid(const PotentialModel& model, const GridRegion& region = {});
void write_potential_grid(const PotentialGrid& grid, std::ostream& out);
void write_potential_grid(const PotentialGrid& grid, const std::string& path);
PotentialGrid read_potential_grid(const std::string& path);

std::string sim_config_to_json(const SimConfig& cfg);
SimConfig sim_config_from_json(const std::string& text);

/// Unknown keys are errors; missing keys keep their defaults.
std::string scenario_spec_to_json(const ScenarioSpec& spec);
ScenarioSpec scenario_spec_from_json(const std::string& text);
ScenarioSpec read_scenario_spec(const std::string& path);

std::string train_config_to_json(const TrainConfig& cfg);
std::string train_report_to_json(const TrainReport& report);
void write_train_report(const TrainReport& report, const std::string& path);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

/// `<output>.config.json`
std::string sidecar_path(const std::string& output);

}  // namespace socialforce
