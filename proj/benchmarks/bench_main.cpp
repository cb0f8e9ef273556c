#include <benchmark/benchmark.h>

#include <vector>

#include "rpinn/catalog.hpp"
#include "rpinn/neuralnet.hpp"
#include "rpinn/oracles.hpp"
#include "rpinn/quadrature.hpp"
#include "rpinn/trainer.hpp"

using namespace rpinn;

namespace {

std::vector<double> inputs(std::size_t n) { return UniformGrid(0.0, 0.05, n).nodes(); }

Mlp default_net() { return Mlp::he_initialized({1, 50, 50, 50, 50, 1}, Activation::ReLU, 0); }

}  // namespace

static void BM_Forward(benchmark::State& state) {
  const auto net = default_net();
  const auto xs = inputs(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(net.forward_batch(xs));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Forward)->Arg(101)->Arg(401);

static void BM_ForwardBackward(benchmark::State& state) {
  const auto net = default_net();
  const auto xs = inputs(static_cast<std::size_t>(state.range(0)));
  const std::vector<double> up(xs.size(), 1.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(net.forward_batch(xs));
    benchmark::DoNotOptimize(grad_loss(net, up, xs));
  }
}
BENCHMARK(BM_ForwardBackward)->Arg(101)->Arg(401);

static void BM_ObjectiveCase1(benchmark::State& state) {
  const auto inst = make_problem("case1");
  const auto obj = make_objective(inst.problem, UniformGrid(0.0, 0.1, static_cast<std::size_t>(state.range(0))));
  GridValues v{UniformGrid(0.0, 0.1, static_cast<std::size_t>(state.range(0))).nodes()}, dv;
  for (auto _ : state) benchmark::DoNotOptimize(obj->loss_and_gradient(v, dv));
}
BENCHMARK(BM_ObjectiveCase1)->Arg(101)->Arg(401);

static void BM_ObjectiveRober(benchmark::State& state) {
  const auto inst = make_problem("rober");
  const UniformGrid grid(1e-5, 1.04e-5, 101);
  const auto obj = make_objective(inst.problem, grid);
  GridValues v(3, std::vector<double>(grid.count(), 1e-3)), dv;
  for (auto _ : state) benchmark::DoNotOptimize(obj->loss_and_gradient(v, dv));
}
BENCHMARK(BM_ObjectiveRober);

static void BM_BdfRober(benchmark::State& state) {
  const auto sys = make_rober_system(0.04, 3e7, 1e4, {1e-5, 0.1});
  BdfConfig cfg;
  cfg.step_size = 1e-4;
  for (auto _ : state) benchmark::DoNotOptimize(bdf_integrate(sys, cfg, {1e-5, 0.1}));
}
BENCHMARK(BM_BdfRober)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
