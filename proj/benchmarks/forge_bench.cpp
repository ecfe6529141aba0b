#include <benchmark/benchmark.h>

#include <algorithm>
#include <random>

#include "forge/attacks.hpp"
#include "forge/lipschitz.hpp"
#include "forge/presets.hpp"

using namespace forge;

namespace {

Tensor random_tensor(Shape shape, std::uint64_t seed) {
  Tensor t(std::move(shape));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n;
  for (auto& v : t.data()) v = n(rng);
  return t;
}

void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Tensor a = random_tensor({n, n}, 1), b = random_tensor({n, n}, 2);
  for (auto _ : state) benchmark::DoNotOptimize(matmul(a, b));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n * n));
}
BENCHMARK(BM_Matmul)->Arg(32)->Arg(128)->Arg(256);

void BM_SpectralNorm(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Tensor w = random_tensor({n, n}, 3);
  for (auto _ : state) benchmark::DoNotOptimize(lipschitz::spectral_norm(w).value);
}
BENCHMARK(BM_SpectralNorm)->Arg(64)->Arg(128);

void BM_MaskedGershgorin(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Tensor a = lipschitz::gram(random_tensor({n, n}, 4));
  std::vector<bool> masked(n);
  for (std::size_t j = 0; j < n; j += 3) masked[j] = true;
  for (auto _ : state) benchmark::DoNotOptimize(lipschitz::masked_gershgorin_bound(a, masked));
}
BENCHMARK(BM_MaskedGershgorin)->Arg(64)->Arg(256);

void BM_MlpForward(benchmark::State& state) {
  const Model m = presets::mlp({784, 128, 64, 10}, 5);
  const Tensor x = random_tensor({static_cast<std::size_t>(state.range(0)), 784}, 6);
  for (auto _ : state) benchmark::DoNotOptimize(m.forward(x));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_MlpForward)->Arg(1)->Arg(64)->Arg(256);

void BM_PgdAttack(benchmark::State& state) {
  const Model m = presets::mlp({784, 128, 64, 10}, 5);
  Tensor x = random_tensor({64, 784}, 7);
  for (auto& v : x.data()) v = std::clamp(0.5 + 0.2 * v, 0.0, 1.0);
  std::vector<std::size_t> y(64);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = i % 10;
  attacks::AttackConfig cfg;
  cfg.steps = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(attacks::run_attack(m, x, y, cfg));
}
BENCHMARK(BM_PgdAttack)->Arg(10)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
