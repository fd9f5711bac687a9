#include <benchmark/benchmark.h>

#include <random>

#include "shiftid/detectors.hpp"
#include "shiftid/prevalence.hpp"
#include "shiftid/simulator.hpp"
#include "shiftid/stats.hpp"

using namespace shiftid;

namespace {

FeatureTable random_table(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n;
  RowMatrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return FeatureTable(std::move(m));
}

sim::SimSpec bench_spec(std::size_t n) {
  return sim::spec_from_json({{"name", "bench"}, {"num_classes", 4}, {"feature_dim", 64},
                              {"class_separation", 2.0}, {"ref_prior", {0.25, 0.25, 0.25, 0.25}},
                              {"test_prior", {0.1, 0.4, 0.4, 0.1}}, {"n_ref", n}, {"n_test", n}});
}

void BM_KsTwoSample(benchmark::State& state) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u;
  std::vector<double> a(static_cast<std::size_t>(state.range(0))), b(a.size());
  for (auto& x : a) x = u(rng);
  for (auto& x : b) x = u(rng);
  for (auto _ : state) benchmark::DoNotOptimize(stats::ks_two_sample(a, b));
}
BENCHMARK(BM_KsTwoSample)->Arg(500)->Arg(5000);

void BM_PcaFit(benchmark::State& state) {
  const auto x = random_table(state.range(0), 512, 2);
  for (auto _ : state) benchmark::DoNotOptimize(stats::pca_fit(x, 32));
}
BENCHMARK(BM_PcaFit)->Arg(1000)->Arg(2000)->Unit(benchmark::kMillisecond);

void BM_Mmd2(benchmark::State& state) {
  const auto x = random_table(state.range(0), 32, 3), y = random_table(state.range(0), 32, 4);
  const auto kernel = stats::median_heuristic_bandwidth(x, y);
  for (auto _ : state) benchmark::DoNotOptimize(stats::mmd2_unbiased(x, y, kernel));
}
BENCHMARK(BM_Mmd2)->Arg(500)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_PermutationTest(benchmark::State& state) {
  const auto x = random_table(state.range(0), 32, 5), y = random_table(state.range(0), 32, 6);
  const auto kernel = stats::median_heuristic_bandwidth(x, y);
  stats::PermutationOptions opt;
  opt.num_permutations = static_cast<std::size_t>(state.range(1));
  opt.seed = 7;
  for (auto _ : state) benchmark::DoNotOptimize(stats::permutation_test(x, y, kernel, opt));
}
BENCHMARK(BM_PermutationTest)->Args({500, 1000})->Args({1000, 1000})->Unit(benchmark::kMillisecond);

void BM_EstimatePrevalence(benchmark::State& state) {
  const auto draw = sim::generate(bench_spec(static_cast<std::size_t>(state.range(0))), 8);
  const auto prior = empirical_prevalence(*draw.ref.labels, 4);
  for (auto _ : state) benchmark::DoNotOptimize(estimate_prevalence(prior, draw.test.outputs));
}
BENCHMARK(BM_EstimatePrevalence)->Arg(2000)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
