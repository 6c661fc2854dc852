#include <benchmark/benchmark.h>

#include "socialforce/inference.hpp"
#include "socialforce/scenarios.hpp"

using namespace socialforce;

namespace {

const Scene& probe() {
  static const Scene scene = gen_circle_scenes(1, PotentialModel::exponential(), 11).scenes.at(0);
  return scene;
}

PotentialModel model_for(int kind) {
  switch (kind) {
    case 0: return PotentialModel::exponential(1.8, 0.35);
    case 1: return PotentialModel::mlp1d(0);
    case 2: return PotentialModel::ffmlp(0, 0);
    default: return PotentialModel::diamond();
  }
}

void BM_LossGradientBackward(benchmark::State& state) {
  const auto m = model_for(static_cast<int>(state.range(0)));
  const SimConfig sim = SimConfig::inference();
  for (auto _ : state) benchmark::DoNotOptimize(scene_loss_gradient(m, probe(), sim));
  state.SetLabel(to_string(m.type()));
}
BENCHMARK(BM_LossGradientBackward)->DenseRange(0, 3)->Unit(benchmark::kMillisecond);

void BM_LossGradientFiniteDifference(benchmark::State& state) {
  PotentialModel m = PotentialModel::mlp1d(0);
  const SimConfig sim = SimConfig::inference();
  const auto theta = m.params().flat();
  const ScalarFunction f = [&](std::span<const double> x) {
    m.set_flat_params(x);
    return scene_loss(m, probe(), sim);
  };
  for (auto _ : state) benchmark::DoNotOptimize(finite_difference_gradient(f, theta, 1e-6));
}
BENCHMARK(BM_LossGradientFiniteDifference)->Unit(benchmark::kMillisecond);

void BM_TapedForward(benchmark::State& state) {
  const auto m = model_for(static_cast<int>(state.range(0)));
  const SimConfig sim = SimConfig::inference();
  for (auto _ : state) benchmark::DoNotOptimize(scene_loss(m, probe(), sim));
  state.SetLabel(to_string(m.type()));
}
BENCHMARK(BM_TapedForward)->DenseRange(0, 3)->Unit(benchmark::kMillisecond);

}  // namespace
