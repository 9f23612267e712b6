#include <benchmark/benchmark.h>

#include <random>

#include "selftrack/solver.hpp"
#include "selftrack/synth.hpp"
#include "selftrack/pipeline.hpp"

namespace {

using namespace selftrack;

MulticutInstance random_instance(std::size_t n, double density, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> cost(0.0, 2.0);
  std::vector<Edge> regular;
  std::vector<Edge> lifted;
  for (NodeId a = 0; a < n; ++a) {
    for (NodeId b = a + 1; b < n; ++b) {
      const double r = u(rng);
      if (r < density) {
        regular.push_back({a, b, cost(rng)});
      } else if (r < density * 1.2) {
        lifted.push_back({a, b, cost(rng)});
      }
    }
  }
  return MulticutInstance(n, std::move(regular), std::move(lifted));
}

void BM_BruteForce(benchmark::State& state) {
  const auto g = random_instance(static_cast<std::size_t>(state.range(0)), 0.5, 1);
  for (auto _ : state) benchmark::DoNotOptimize(solve_bruteforce(g));
}
BENCHMARK(BM_BruteForce)->DenseRange(6, 10, 2)->Unit(benchmark::kMillisecond);

void BM_GaecKl(benchmark::State& state) {
  const auto g = random_instance(static_cast<std::size_t>(state.range(0)), 0.1, 2);
  for (auto _ : state) benchmark::DoNotOptimize(solve_gaec_kl(g));
  state.counters["edges"] = static_cast<double>(g.num_edges() + g.num_lifted_edges());
}
BENCHMARK(BM_GaecKl)->RangeMultiplier(2)->Range(64, 256)->Unit(benchmark::kMillisecond);

// Tracking graph of the synthetic benchmark sequence with IoU-only costs.
void BM_TrackSequence(benchmark::State& state) {
  auto spec = SynthSpec::benchmark(1);
  spec.patch_height = spec.patch_width = 4;
  const auto seq = synth_sequence(spec);
  PipelineConfig config;
  config.features = FeatureSet::iou_only();
  config.lifted_gaps.clear();
  const auto models = fit_affinity(seq.detections, seq.matches, {}, config);
  for (auto _ : state) benchmark::DoNotOptimize(run_tracking(seq.detections, seq.matches, {}, models, config));
}
BENCHMARK(BM_TrackSequence)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
