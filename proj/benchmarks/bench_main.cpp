#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "iidwb/distributions.hpp"
#include "iidwb/icp.hpp"
#include "iidwb/regressor.hpp"
#include "iidwb/rng.hpp"
#include "iidwb/scm.hpp"

using namespace iidwb;

namespace {

std::vector<double> normals(std::size_t n, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  std::normal_distribution<double> d;
  std::vector<double> v(n);
  for (double& x : v) x = d(rng);
  return v;
}

std::vector<SampleBatch> example_batches(std::size_t n) {
  Rng rng = make_rng(1);
  std::vector<SampleBatch> out;
  const LinearGaussianScm scm = four_node_example();
  for (const Environment& env : single_target_environments(scm, GenConfig{}, rng))
    out.push_back(sample(scm, env, n, rng));
  return out;
}

void BM_EnergyDistance(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = normals(n, 1);
  const auto b = normals(n, 2);
  for (auto _ : state) benchmark::DoNotOptimize(energy_distance(a, b));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_EnergyDistance)->RangeMultiplier(4)->Range(64, 4096)->Complexity();

void BM_Sample(benchmark::State& state) {
  Rng rng = make_rng(3);
  GenConfig gen;
  const LinearGaussianScm scm = add_confounders(random_scm(gen, rng), 2, rng);
  const Environment obs{};
  for (auto _ : state) benchmark::DoNotOptimize(sample(scm, obs, 2000, rng));
}
BENCHMARK(BM_Sample);

void BM_TrainRegressor(benchmark::State& state) {
  const auto batches = example_batches(2000);
  const PenaltyWeights w(3);
  const TrainConfig cfg;
  for (auto _ : state) {
    Rng rng = make_rng(4);
    benchmark::DoNotOptimize(train_regressor(batches, w, cfg, rng));
  }
}
BENCHMARK(BM_TrainRegressor)->Unit(benchmark::kMillisecond);

void BM_IcpIdentify(benchmark::State& state) {
  const auto batches = example_batches(5000);
  const IcpConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(icp_identify(batches, cfg));
}
BENCHMARK(BM_IcpIdentify)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
