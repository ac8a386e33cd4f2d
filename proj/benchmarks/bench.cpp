#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "ainr/bspline.hpp"
#include "ainr/inr.hpp"
#include "ainr/loss.hpp"

using namespace ainr;

namespace {

std::vector<double> noise(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d(0.0, 0.3);
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

void BM_BsplineBasis(benchmark::State& state) {
  const auto grid = SplineGrid::make(10, static_cast<std::size_t>(state.range(0)));
  std::vector<double> values(grid.order + 1), derivs(grid.order + 1);
  const auto xs = noise(4096, 1);
  for (auto _ : state) {
    for (double x : xs) benchmark::DoNotOptimize(local_basis(grid, x, values, derivs));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(xs.size()));
}
BENCHMARK(BM_BsplineBasis)->Arg(1)->Arg(2)->Arg(3)->Arg(7);

void BM_KanForward(benchmark::State& state) {
  const auto model = InrModel::build(InrConfig::defaults_for(Arch::kan));
  const auto t = time_grid(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(model.render(t));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_KanForward)->Arg(2048)->Arg(8192)->Unit(benchmark::kMillisecond);

void BM_KanForwardBackward(benchmark::State& state) {
  const auto model = InrModel::build(InrConfig::defaults_for(Arch::kan));
  const auto t = time_grid(static_cast<std::size_t>(state.range(0)));
  const auto target = noise(t.size(), 2);
  for (auto _ : state) {
    Graph g;
    auto p = g.parameter(Tensor::vector(model.flatten()));
    auto y = model.forward(g, p, g.constant(Tensor::vector(t)));
    g.backward(l1_loss(g.constant(Tensor::vector(target)), y));
    benchmark::DoNotOptimize(g.grad(p).values.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_KanForwardBackward)->Arg(2048)->Unit(benchmark::kMillisecond);

void BM_MelStftLoss(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const CombinedLoss loss(LossConfig{});
  const auto target = loss.prepare(noise(n, 3));
  const auto estimate = noise(n, 4);
  for (auto _ : state) {
    Graph g;
    auto x = g.parameter(Tensor::vector(estimate));
    g.backward(loss(target, x));
    benchmark::DoNotOptimize(g.grad(x).values.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_MelStftLoss)->Arg(2048)->Arg(32768)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
