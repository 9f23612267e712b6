#include <benchmark/benchmark.h>

#include <random>

#include "selftrack/autoencoder.hpp"

namespace {

using namespace selftrack;

std::vector<ImagePatch> random_patches(const ArchConfig& arch, int count) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<ImagePatch> out;
  for (int i = 0; i < count; ++i) {
    ImagePatch p(arch.channels, arch.height, arch.width);
    for (auto& v : p.pixels) v = u(rng);
    out.push_back(std::move(p));
  }
  return out;
}

void BM_Encode(benchmark::State& state) {
  ArchConfig arch = ArchConfig::desk_default();
  arch.height = arch.width = static_cast<int>(state.range(0));
  const AutoEncoderModel model(arch, 1);
  const auto patches = random_patches(arch, 64);
  for (auto _ : state) benchmark::DoNotOptimize(model.encode_all(patches));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(patches.size()));
}
BENCHMARK(BM_Encode)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);

void BM_TrainStep(benchmark::State& state) {
  ArchConfig arch = ArchConfig::desk_default();
  arch.height = arch.width = static_cast<int>(state.range(0));
  AutoEncoderModel model(arch, 1);
  const auto patches = random_patches(arch, 8);
  std::vector<const ImagePatch*> batch;
  for (const auto& p : patches) batch.push_back(&p);
  for (auto _ : state) {
    model.zero_gradients();
    benchmark::DoNotOptimize(evaluate_batch(model, batch, {}, 0.0, true, true));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(patches.size()));
}
BENCHMARK(BM_TrainStep)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);

}  // namespace
