#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "socialforce/inference.hpp"
#include "socialforce/io.hpp"
#include "socialforce/scenarios.hpp"
#include "support.hpp"

using namespace socialforce;
using socialforce::testing::Gen;
using socialforce::testing::TempDir;

namespace {

Scene line_scene(std::vector<std::vector<Vec2>> traj) {
  Scene s;
  s.trajectories = std::move(traj);
  s.goals.assign(s.trajectories.size(), {10, 0});
  return s;
}

std::vector<Scene> small_circle_set(std::size_t n, std::size_t observations = 9) {
  ScenarioSpec spec;
  spec.circle_observations = observations;
  return gen_circle_scenes(n, PotentialModel::exponential(), 1, SimConfig::inference(), spec).scenes;
}

}  // namespace

TEST(TrajectoryLoss, Examples) {
  const Scene obs = line_scene({{{0, 0}, {1, 0}}});
  EXPECT_EQ(trajectory_loss(std::vector<std::vector<Vec2>>{{{0, 0}, {1, 0}}}, obs), 0.0);
  EXPECT_DOUBLE_EQ(trajectory_loss(std::vector<std::vector<Vec2>>{{{0, 0}, {1, 1}}}, obs), 0.5);
  // mean over pedestrians and observations
  const Scene two = line_scene({{{0, 0}, {0, 0}}, {{0, 0}, {0, 0}}});
  EXPECT_DOUBLE_EQ(trajectory_loss(std::vector<std::vector<Vec2>>{{{3, 4}, {0, 0}}, {{0, 0}, {0, 0}}}, two), 25.0 / 4);
}

TEST(TrajectoryLoss, ShapeMismatchThrows) {
  const Scene obs = line_scene({{{0, 0}, {1, 0}}});
  EXPECT_THROW(trajectory_loss(std::vector<std::vector<Vec2>>{{{0, 0}}}, obs), std::invalid_argument);
  EXPECT_THROW(trajectory_loss(std::vector<std::vector<Vec2>>{{{0, 0}, {1, 0}}, {{0, 0}, {1, 0}}}, obs),
               std::invalid_argument);
}

TEST(TrajectoryLoss, TapedMatchesValueAndGradient) {
  Gen gen(4);
  const Scene obs = line_scene({{{0, 0}, {1, 0}, {2, 0.5}}, {{3, 3}, {2, 2}, {1, 1}}});
  ad::Tape tape;
  std::vector<std::vector<VarVec2>> pred(2);
  std::vector<std::vector<Vec2>> plain(2);
  std::vector<ad::Var> vars;
  for (std::size_t i = 0; i < 2; ++i) {
    for (std::size_t k = 0; k < 3; ++k) {
      const Vec2 p{gen.uniform(-3, 3), gen.uniform(-3, 3)};
      plain[i].push_back(p);
      pred[i].push_back({tape.variable(p.x), tape.variable(p.y)});
      vars.push_back(pred[i].back().x);
    }
  }
  const ad::Var loss = trajectory_loss(pred, obs);
  EXPECT_NEAR(loss.value(), trajectory_loss(plain, obs), 1e-14);
  const auto g = tape.gradient(loss, vars);
  for (std::size_t i = 0; i < 2; ++i) {
    for (std::size_t k = 0; k < 3; ++k) {
      EXPECT_NEAR(g.scalar(i * 3 + k), 2.0 * (plain[i][k].x - obs.trajectories[i][k].x) / 6.0, 1e-14);
    }
  }
}

TEST(Sgd, Examples) {
  ParameterSet p{{ParamBlock{"a", 1, 1, {1.0}}}};
  const std::vector<double> g = {2.0};
  ASSERT_TRUE(sgd_step(p, g, 0.1));
  EXPECT_DOUBLE_EQ(p.blocks[0].values[0], 0.8);
  const std::vector<double> zero = {0.0};
  ASSERT_TRUE(sgd_step(p, zero, 0.1));
  EXPECT_DOUBLE_EQ(p.blocks[0].values[0], 0.8);
}

TEST(Sgd, NonFiniteGradientLeavesParametersUntouched) {
  ParameterSet p{{ParamBlock{"a", 1, 2, {1.0, 2.0}}}};
  const std::vector<double> g = {0.5, std::nan("")};
  EXPECT_FALSE(sgd_step(p, g, 0.1));
  EXPECT_EQ(p.blocks[0].values, (std::vector<double>{1.0, 2.0}));
  const std::vector<double> short_g = {0.5};
  EXPECT_THROW(sgd_step(p, short_g, 0.1), std::invalid_argument);
}

TEST(SceneLoss, NearZeroAtTheGenerativeModel) {
  // Not exactly zero: the re-simulation starts from the velocity estimated
  // from the first two observations, not the generator's initial velocity.
  const auto scenes = small_circle_set(3);
  const SimConfig sim = SimConfig::inference();
  for (const auto& s : scenes) {
    EXPECT_LT(scene_loss(PotentialModel::exponential(), s, sim), 1e-9);
    EXPECT_LT(scene_loss_value(PotentialModel::exponential(), s, sim), 1e-9);
  }
  EXPECT_LT(mean_displacement_error(PotentialModel::exponential(), scenes, sim), 1e-4);
  EXPECT_GT(scene_loss(PotentialModel::exponential(1.0, 0.5), scenes[0], sim), 1e-4);
}

TEST(SceneLoss, TapedAndValueRolloutsAgree) {
  const auto scenes = small_circle_set(2);
  const SimConfig sim = SimConfig::inference();
  const PotentialModel models[] = {PotentialModel::mlp1d(1), PotentialModel::diamond(), PotentialModel::ffmlp(1, 1)};
  for (const auto& m : models) {
    const double a = scene_loss(m, scenes[0], sim);
    EXPECT_NEAR(a, scene_loss_value(m, scenes[0], sim), 1e-12 * std::max(1.0, a));
    EXPECT_NEAR(a, scene_loss_gradient(m, scenes[0], sim).loss, 1e-12 * std::max(1.0, a));
  }
}

TEST(SimForScene, OversamplingFromInterval) {
  Scene s = line_scene({{{0, 0}, {1, 0}}});
  s.obs_interval = 0.2;
  EXPECT_EQ(sim_for_scene(SimConfig{}, s).oversampling, 5u);
  s.obs_interval = 0.41;
  EXPECT_THROW(sim_for_scene(SimConfig{}, s), std::invalid_argument);
}

TEST(Train, ZeroEpochsChangesNothing) {
  const auto scenes = small_circle_set(2);
  PotentialModel m = PotentialModel::mlp1d(0);
  const auto before = m.params();
  TrainConfig cfg;
  cfg.epochs = 0;
  const auto r = train(scenes, m, SimConfig::inference(), cfg);
  EXPECT_EQ(m.params(), before);
  EXPECT_TRUE(r.loss_curve.empty());
  EXPECT_EQ(r.steps, 0u);
}

TEST(Train, DescentWithHalvingReducesLoss) {
  // A single gradient step at a small enough rate must not increase the loss.
  const auto scenes = small_circle_set(1);
  const SimConfig sim = SimConfig::inference();
  const PotentialModel m0 = PotentialModel::exponential(1.6, 0.4);
  const auto lg = scene_loss_gradient(m0, scenes[0], sim);
  double lr = 1.0;
  bool decreased = false;
  for (int i = 0; i < 12 && !decreased; ++i, lr *= 0.5) {
    ParameterSet p = m0.params();
    ASSERT_TRUE(sgd_step(p, lg.gradient, lr));
    PotentialModel m1 = m0;
    m1.set_params(p);
    decreased = scene_loss(m1, scenes[0], sim) < lg.loss;
  }
  EXPECT_TRUE(decreased);
}

TEST(Train, ExponentialMovesTowardsTruth) {
  const auto scenes = small_circle_set(4);
  PotentialModel m = PotentialModel::exponential(1.7, 0.35);
  TrainConfig cfg;
  cfg.learning_rate = 0.05;
  cfg.epochs = 5;
  const SimConfig sim = SimConfig::inference();
  const double before = mean_displacement_error(m, scenes, sim);
  const auto r = train(scenes, m, sim, cfg);
  EXPECT_EQ(r.steps, 20u);
  EXPECT_EQ(r.loss_curve.size(), 20u);
  EXPECT_EQ(r.epoch_loss.size(), 5u);
  EXPECT_LT(mean_displacement_error(m, scenes, sim), before);
  EXPECT_EQ(r.final_params, m.params());
}

TEST(Train, DeterministicForFixedSeed) {
  const auto scenes = small_circle_set(3);
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.seed = 5;
  PotentialModel a = PotentialModel::mlp1d(3);
  PotentialModel b = PotentialModel::mlp1d(3);
  const auto ra = train(scenes, a, SimConfig::inference(), cfg);
  const auto rb = train(scenes, b, SimConfig::inference(), cfg);
  EXPECT_EQ(ra.loss_curve, rb.loss_curve);
  EXPECT_EQ(a.params(), b.params());
  cfg.threads = 2;
  cfg.batch_size = 3;
  PotentialModel c = PotentialModel::mlp1d(3);
  PotentialModel d = PotentialModel::mlp1d(3);
  train(scenes, c, SimConfig::inference(), cfg);
  cfg.threads = 1;
  train(scenes, d, SimConfig::inference(), cfg);
  EXPECT_EQ(c.params(), d.params());
}

TEST(Train, MaxStepsStops) {
  const auto scenes = small_circle_set(4);
  PotentialModel m = PotentialModel::mlp1d(0);
  TrainConfig cfg;
  cfg.epochs = 10;
  cfg.max_steps = 3;
  EXPECT_EQ(train(scenes, m, SimConfig::inference(), cfg).steps, 3u);
}

TEST(Train, WarmStartFromSavedModel) {
  TempDir dir;
  const auto scenes = small_circle_set(2);
  PotentialModel saved = PotentialModel::mlp1d(7);
  write_model(saved, dir.file("m.json"));
  PotentialModel m = PotentialModel::mlp1d(0);
  TrainConfig cfg;
  cfg.epochs = 0;
  cfg.init_from = dir.file("m.json");
  const auto r = train(scenes, m, SimConfig::inference(), cfg);
  EXPECT_EQ(m.params(), saved.params());
  EXPECT_EQ(r.initial_params, saved.params());
  PotentialModel wrong = PotentialModel::exponential();
  EXPECT_THROW(train(scenes, wrong, SimConfig::inference(), cfg), std::invalid_argument);
}

TEST(Train, GradientChecksReported) {
  const auto scenes = small_circle_set(1);
  PotentialModel m = PotentialModel::mlp1d(0);
  TrainConfig cfg;
  cfg.epochs = 1;
  cfg.gradient_checks = true;
  const auto r = train(scenes, m, SimConfig::inference(), cfg);
  ASSERT_TRUE(r.start_check_rel_err && r.end_check_rel_err);
  EXPECT_LT(*r.start_check_rel_err, 1e-4);
  EXPECT_LT(*r.end_check_rel_err, 1e-4);
}

TEST(Train, RejectsBadConfig) {
  const auto scenes = small_circle_set(1);
  PotentialModel m = PotentialModel::mlp1d(0);
  TrainConfig cfg;
  cfg.learning_rate = 0.0;
  EXPECT_THROW(train(scenes, m, SimConfig::inference(), cfg), std::invalid_argument);
  cfg = {};
  EXPECT_THROW(train({}, m, SimConfig::inference(), cfg), std::invalid_argument);
  EXPECT_EQ(TrainConfig::default_learning_rate(ModelType::FourierMlp2d), 0.05);
}

TEST(Windows, SplitLayout) {
  const auto scenes = small_circle_set(2, 20);
  const auto w = split_windows(scenes, 8, 7);
  // starts 0 and 7 fit into 21 observations, 14 does not
  ASSERT_EQ(w.size(), 4u);
  for (const auto& s : w) EXPECT_EQ(s.n_observations(), 8u);
  EXPECT_EQ(w[1].trajectories[0][0], scenes[0].trajectories[0][7]);
  EXPECT_EQ(w[1].trajectories[1][7], scenes[0].trajectories[1][14]);
  EXPECT_EQ(w[2].trajectories, split_windows(std::span(scenes).subspan(1), 8, 7)[0].trajectories);
  EXPECT_EQ(w[2].goals, scenes[1].goals);
  EXPECT_EQ(split_windows(scenes, 21, 1).size(), 2u);
  EXPECT_THROW(split_windows(scenes, 1, 1), std::invalid_argument);
  EXPECT_THROW(split_windows(scenes, 4, 0), std::invalid_argument);
  EXPECT_TRUE(split_windows(scenes, 30, 1).empty());
}

TEST(Filter, KeepsInteractingScenes) {
  Scene far = line_scene({{{0, 0}, {1, 0}}, {{0, 10}, {1, 10}}});
  Scene near = line_scene({{{0, 0}, {1, 0}}, {{0, 1}, {1, 1}}});
  const std::vector<Scene> all = {far, near};
  const auto kept = filter_interacting(all, 4.0);
  ASSERT_EQ(kept.size(), 1u);
  EXPECT_EQ(kept[0], near);
}

TEST(Benchmark, CountsAndAgreement) {
  const auto scenes = small_circle_set(1);
  const auto b = benchmark_gradients(PotentialModel::mlp1d(0), scenes[0], SimConfig::inference(), 1);
  EXPECT_TRUE(b.agreement) << b.agreement_rel_err;
  EXPECT_EQ(b.fd_evaluations, 20u);
  EXPECT_GT(b.t_backprop, 0.0);
  EXPECT_GT(b.ratio, 0.0);
}
