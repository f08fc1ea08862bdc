#include <benchmark/benchmark.h>

#include "leea/data.hpp"
#include "leea/evo.hpp"
#include "leea/rng.hpp"

namespace {

void BM_EvoStep(benchmark::State& state) {
  leea::EvoConfig cfg;
  cfg.population = static_cast<std::size_t>(state.range(0));
  cfg.batch_size = static_cast<std::size_t>(state.range(1));
  cfg.sigma = 0.01;
  const leea::NetworkSpec spec{8, 8, false, {32, 16, 10}};
  leea::BlobSpec blobs;
  blobs.per_class = 200;
  const auto data = leea::synthetic_blobs(blobs, 3);
  const leea::RunStreams streams(11);
  leea::Rng rng(5);
  auto evo_state = leea::initialize(cfg, spec, leea::sample_batch(data, cfg.batch_size, rng), streams);
  for (auto _ : state) {
    evo_state = leea::step(evo_state, leea::sample_batch(data, cfg.batch_size, rng), cfg, streams);
  }
}
BENCHMARK(BM_EvoStep)->Args({100, 64})->Args({1000, 64})->Unit(benchmark::kMillisecond);

}  // namespace
