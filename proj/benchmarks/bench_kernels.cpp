#include <benchmark/benchmark.h>

#include <random>

#include "leea/model.hpp"
#include "leea/tensor.hpp"

namespace {

leea::Tensor random_tensor(leea::Shape shape, std::uint64_t seed) {
  leea::Tensor t(std::move(shape));
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> dist(-1.0f, 1.0f);
  for (auto& v : t.values()) v = dist(rng);
  return t;
}

// Args: population, batch, outputs, inputs.
void BM_PopLinearShared(benchmark::State& state) {
  const auto p = static_cast<std::size_t>(state.range(0));
  const auto b = static_cast<std::size_t>(state.range(1));
  const auto n = static_cast<std::size_t>(state.range(2));
  const auto m = static_cast<std::size_t>(state.range(3));
  const auto w = random_tensor({p, n, m}, 1);
  const auto bias = random_tensor({p, n}, 2);
  const auto x = random_tensor({b, m}, 3);
  for (auto _ : state) {
    benchmark::DoNotOptimize(leea::pop_linear_shared(w, bias, x));
  }
  state.counters["GFLOP/s"] = benchmark::Counter(2.0 * static_cast<double>(p * b * n * m),
                                                 benchmark::Counter::kIsIterationInvariantRate,
                                                 benchmark::Counter::kIs1000);
}
BENCHMARK(BM_PopLinearShared)
    ->Args({100, 256, 64, 196})
    ->Args({100, 256, 256, 196})
    ->Args({16, 512, 256, 196})
    ->Unit(benchmark::kMillisecond);

void BM_ForwardPopulation(benchmark::State& state) {
  const auto p = static_cast<std::size_t>(state.range(0));
  const auto b = static_cast<std::size_t>(state.range(1));
  leea::NetworkSpec spec = state.range(2) == 0 ? leea::NetworkSpec{28, 28, true, {64, 32, 10}}
                                               : leea::NetworkSpec::mnist();
  const auto params = leea::glorot_uniform_init(spec, p, 7);
  const auto images = random_tensor({b, 28, 28}, 4);
  for (auto _ : state) {
    benchmark::DoNotOptimize(leea::forward(params, images));
  }
  state.counters["nets/s"] = benchmark::Counter(static_cast<double>(p), benchmark::Counter::kIsIterationInvariantRate);
}
BENCHMARK(BM_ForwardPopulation)->Args({100, 256, 0})->Args({100, 256, 1})->Unit(benchmark::kMillisecond);

}  // namespace
