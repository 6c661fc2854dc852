#include <benchmark/benchmark.h>

#include "socialforce/dynamics.hpp"
#include "socialforce/scenarios.hpp"

using namespace socialforce;

namespace {

void BM_CorridorRollout(benchmark::State& state) {
  ScenarioSpec spec;
  spec.kind = ScenarioKind::Corridor;
  spec.n_pedestrians = static_cast<std::size_t>(state.range(0));
  spec.corridor_length = 25.0 * static_cast<double>(spec.n_pedestrians) / 16.0;
  const auto setup = gen_corridor(spec);
  const auto model = PotentialModel::diamond();
  for (auto _ : state) benchmark::DoNotOptimize(rollout(setup.initial, setup.walls, model, setup.sim, 11));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_CorridorRollout)->RangeMultiplier(2)->Range(4, 64)->Complexity()->Unit(benchmark::kMillisecond);

void BM_PotentialValue(benchmark::State& state) {
  const auto model = state.range(0) == 0 ? PotentialModel::mlp1d(0) : PotentialModel::ffmlp(0, 0);
  const InteractionInputs in{0.7, 0.2, 0.9};
  for (auto _ : state) benchmark::DoNotOptimize(model.value(in));
  state.SetLabel(to_string(model.type()));
}
BENCHMARK(BM_PotentialValue)->Arg(0)->Arg(1);

}  // namespace
