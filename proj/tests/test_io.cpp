#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "socialforce/inference.hpp"
#include "socialforce/io.hpp"
#include "socialforce/scenarios.hpp"
#include "support.hpp"

using namespace socialforce;
using socialforce::testing::data_path;
using socialforce::testing::Gen;
using socialforce::testing::TempDir;

namespace {

std::vector<TrajectoryRow> parse(const std::string& text) {
  std::istringstream in(text);
  return parse_trajectory_rows(in);
}

std::size_t error_line(const std::string& text) {
  try {
    parse(text);
  } catch (const FormatError& e) {
    return e.line();
  }
  return 0;
}

}  // namespace

TEST(Rows, SeparatorsAndComments) {
  const auto rows = parse("# header\n0 1 0.5 1.5\n0,2,1e-1,-2\n\n10\t1\t0.75  1.5 # trailing\n");
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0], (TrajectoryRow{0, 1, 0.5, 1.5}));
  EXPECT_EQ(rows[1], (TrajectoryRow{0, 2, 0.1, -2.0}));
  EXPECT_EQ(rows[2], (TrajectoryRow{10, 1, 0.75, 1.5}));
}

TEST(Rows, EmptyInputGivesNoScenes) {
  const auto rows = parse("");
  EXPECT_TRUE(rows.empty());
  EXPECT_TRUE(scenes_from_rows(rows, 2.5).empty());
}

TEST(Rows, MalformedLinesReportLineNumbers) {
  EXPECT_EQ(error_line("0 1 0 0\n0 2 0\n"), 2u);
  EXPECT_EQ(error_line("0 1 0 0\n# c\n10 1 abc 0\n"), 3u);
  EXPECT_EQ(error_line("0 1 0 0\n0 1 1 1\n"), 2u);
  EXPECT_EQ(error_line("10 1 0 0\n0 1 1 1\n"), 2u);
  EXPECT_EQ(error_line("0 1.5 0 0\n"), 1u);
  EXPECT_EQ(error_line("0 1 nan 0\n"), 1u);
}

TEST(Rows, NonConstantStrideRejected) {
  EXPECT_THROW(parse("0 1 0 0\n10 1 0 0\n30 1 0 0\n"), FormatError);
  EXPECT_NO_THROW(parse("0 1 0 0\n10 1 0 0\n20 1 0 0\n"));
}

TEST(Scenes, TwentyOneFramesTwoPedestriansIsOneScene) {
  const auto scenes = read_trajectories(data_path("two_peds_21.txt"));
  ASSERT_EQ(scenes.size(), 1u);
  const auto& s = scenes[0];
  EXPECT_EQ(s.n_pedestrians(), 2u);
  EXPECT_EQ(s.n_observations(), 21u);
  EXPECT_DOUBLE_EQ(s.obs_interval, 0.4);
  EXPECT_EQ(s.trajectories[0][0], (Vec2{-4, 0}));
  EXPECT_NEAR(s.trajectories[1][20].y, -4 + 1.2 * 8.0, 1e-12);
  // goal 2 s ahead along the terminal velocity
  EXPECT_NEAR(s.goals[0].x, s.trajectories[0][20].x + 2.0 * 1.3, 1e-9);
  EXPECT_NEAR(s.goals[0].y, 0.0, 1e-12);
}

TEST(Scenes, WindowsKeepPedestriansPresentThroughout) {
  const auto scenes = read_trajectories(data_path("trajnet_sample.txt"));
  ASSERT_EQ(scenes.size(), 2u);
  EXPECT_EQ(scenes[0].n_pedestrians(), 3u);
  EXPECT_EQ(scenes[1].n_pedestrians(), 4u);
  for (const auto& s : scenes) EXPECT_NO_THROW(s.validate());
}

TEST(Scenes, ShortWindowOption) {
  const auto scenes = read_trajectories(data_path("two_peds_21.txt"), 2.5, {.observations = 4});
  EXPECT_EQ(scenes.size(), 4u);
  EXPECT_EQ(scenes[0].n_observations(), 5u);
  EXPECT_THROW(read_trajectories(data_path("two_peds_21.txt"), 0.0), std::invalid_argument);
}

TEST(Scenes, MissingFile) { EXPECT_ANY_THROW(read_trajectories("/nonexistent/x.txt")); }

TEST(Scenes, RoundTripThroughFile) {
  TempDir dir;
  const auto scenes = gen_circle_scenes(3, PotentialModel::exponential(), 2).scenes;
  write_trajectories(scenes, dir.file("t.txt"));
  const auto back = read_trajectories(dir.file("t.txt"));
  ASSERT_EQ(back.size(), 3u);
  for (std::size_t s = 0; s < 3; ++s) {
    ASSERT_EQ(back[s].n_pedestrians(), 2u);
    for (std::size_t i = 0; i < 2; ++i) {
      for (std::size_t k = 0; k < 21; ++k) EXPECT_EQ(back[s].trajectories[i][k], scenes[s].trajectories[i][k]);
    }
  }
}

TEST(Models, GoldenFile) {
  const auto m = read_model(data_path("mlp1d_model.json"));
  EXPECT_EQ(m.type(), ModelType::Mlp1d);
  EXPECT_NEAR(m.value({0.5}), 0.9006611321844825, 1e-14);
  EXPECT_NEAR(m.value({1.0}), 1.1175249519463755, 1e-14);
  const auto e = read_model(data_path("exp_model.json"));
  EXPECT_EQ(e, PotentialModel::exponential(2.1, 0.3));
}

TEST(Models, RoundTripEveryType) {
  const PotentialModel models[] = {PotentialModel::exponential(1.9, 0.25), PotentialModel::mlp1d(4),
                                   PotentialModel::ffmlp(2, 3), PotentialModel::diamond()};
  for (const auto& m : models) {
    const auto back = model_from_json(model_to_json(m));
    EXPECT_EQ(back, m) << to_string(m.type());
    EXPECT_EQ(model_checksum(back), model_checksum(m));
  }
  EXPECT_NE(model_checksum(PotentialModel::mlp1d(4)), model_checksum(PotentialModel::mlp1d(5)));
}

TEST(Models, MalformedJson) {
  EXPECT_THROW(model_from_json("{"), FormatError);
  EXPECT_THROW(model_from_json(R"({"model_type": "spline", "params": []})"), FormatError);
  EXPECT_THROW(model_from_json(R"({"model_type": "exp", "params": [], "extra": 1})"), FormatError);
  EXPECT_THROW(model_from_json(R"({"model_type": "exp", "params": [{"name": "v0", "shape": [1, 1], "values": [-1]},
                                  {"name": "sigma", "shape": [1, 1], "values": [0.3]}]})"),
               FormatError);
}

TEST(Grid, OneDimensionalExample) {
  GridRegion r;
  r.x_min = 0.0;
  r.x_max = 1.0;
  r.nx = 3;
  const auto g = export_potential_grid(PotentialModel::exponential(2.1, 0.3), r);
  EXPECT_FALSE(g.two_dimensional);
  ASSERT_EQ(g.values.size(), 3u);
  EXPECT_EQ(g.x, (std::vector<double>{0.0, 0.5, 1.0}));
  EXPECT_NEAR(g.values[0], 2.1, 1e-14);
  EXPECT_NEAR(g.values[1], 2.1 * std::exp(-0.5 / 0.3), 1e-14);
}

TEST(Grid, TwoDimensionalDiamondPeaksAtOrigin) {
  GridRegion r;
  r.nx = 5;
  r.ny = 5;
  const auto g = export_potential_grid(PotentialModel::diamond({2.0, 1.5, 0.5, 0.0}), r);
  ASSERT_TRUE(g.two_dimensional);
  ASSERT_EQ(g.values.size(), 25u);
  EXPECT_NEAR(g.at(2, 2), 2.0, 1e-5);  // smoothed |.| rounds the tip
  for (double v : g.values) EXPECT_LE(v, g.at(2, 2) + 1e-12);
  EXPECT_NEAR(g.at(2, 0), g.at(2, 4), 1e-12);
}

TEST(Grid, InputsConvention) {
  GridRegion r;
  const auto in = grid_inputs(1.0, -0.5, r);
  EXPECT_NEAR(in.d_par, 1.0, 1e-12);
  EXPECT_NEAR(in.d_perp, -0.5, 1e-12);
}

TEST(Grid, CsvRoundTrip) {
  TempDir dir;
  GridRegion r;
  r.nx = 7;
  r.ny = 4;
  const auto g = export_potential_grid(PotentialModel::ffmlp(1, 1), r);
  write_potential_grid(g, dir.file("g.csv"));
  const auto back = read_potential_grid(dir.file("g.csv"));
  EXPECT_EQ(back, g);
  std::ifstream in(dir.file("g.csv"));
  std::string first;
  std::getline(in, first);
  EXPECT_EQ(first, "# model_type ffmlp");
}

TEST(Grid, RejectsDegenerateRegion) {
  GridRegion r;
  r.nx = 1;
  EXPECT_THROW(export_potential_grid(PotentialModel::exponential(), r), std::invalid_argument);
}

TEST(Configs, RoundTripsAndUnknownKeys) {
  SimConfig c = SimConfig::inference();
  c.dt = 0.02;
  EXPECT_EQ(sim_config_from_json(sim_config_to_json(c)).dt, 0.02);
  ScenarioSpec s;
  s.kind = ScenarioKind::Gate;
  s.seed = 77;
  s.speeds.identical = true;
  const auto back = scenario_spec_from_json(scenario_spec_to_json(s));
  EXPECT_EQ(back.kind, ScenarioKind::Gate);
  EXPECT_EQ(back.seed, 77u);
  EXPECT_TRUE(back.speeds.identical);
  EXPECT_THROW(scenario_spec_from_json(R"({"kind": "circle", "radius": 3})"), FormatError);
  const auto h = read_scenario_spec(data_path("headon.json"));
  EXPECT_EQ(h.kind, ScenarioKind::Headon);
  EXPECT_EQ(h.duration, 4.0);
  EXPECT_EQ(sidecar_path("out/m.json"), "out/m.json.config.json");
}

TEST(RealData, IngestionAndFiveSgdSteps) {
  const auto scenes = read_trajectories(data_path("trajnet_sample.txt"));
  ASSERT_FALSE(scenes.empty());
  PotentialModel m = PotentialModel::mlp1d(0);
  TrainConfig cfg;
  cfg.epochs = 5;
  cfg.max_steps = 5;
  const auto report = train(scenes, m, SimConfig::inference(), cfg);
  EXPECT_EQ(report.steps, 5u);
  EXPECT_EQ(report.failed_batches, 0u);
  for (double l : report.loss_curve) EXPECT_TRUE(std::isfinite(l));
  EXPECT_NE(m.params(), report.initial_params);
}
