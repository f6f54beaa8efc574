#include <benchmark/benchmark.h>

#include <vector>

#include "pushcraft/ensemble.hpp"
#include "pushcraft/forward_model.hpp"
#include "pushcraft/gp.hpp"
#include "pushcraft/mdn.hpp"
#include "pushcraft/mppi.hpp"
#include "pushcraft/trajopt.hpp"

using namespace pushcraft;

namespace {

PushDataset dataset(std::size_t n) {
  Rng rng(1);
  return collect_dataset(n, SimParams{}, 20, rng);
}

Ensemble random_ensemble(int members) {
  Rng rng(2);
  Ensemble e;
  e.normalization = Normalization::identity(3);
  for (int m = 0; m < members; ++m) e.members.push_back(MdnParams::random(MdnArchitecture{}, rng));
  return e;
}

}  // namespace

static void BM_MdnGradient(benchmark::State& state) {
  Rng rng(3);
  const MdnParams p = MdnParams::random(MdnArchitecture{}, rng);
  const std::vector<double> h{0.01, 0.02, 0.4};
  const Vec3 t(0.01, 0.03, 0.1);
  for (auto _ : state) benchmark::DoNotOptimize(nll_gradient(p, h, t));
}
BENCHMARK(BM_MdnGradient);

static void BM_EnsemblePredict(benchmark::State& state) {
  const Ensemble e = random_ensemble(static_cast<int>(state.range(0)));
  const BoxState s{0.1, -0.2, 0.3};
  const PushAction u(0.0, 1.0, 0.3);
  for (auto _ : state) benchmark::DoNotOptimize(ensemble_predict(e, s, u));
}
BENCHMARK(BM_EnsemblePredict)->Arg(1)->Arg(5)->Arg(10);

static void BM_GpPredict(benchmark::State& state) {
  std::array<GpHyper, kOutputDim> hyper;
  hyper.fill(GpHyper::defaults(3));
  const GpModel model = gp_fit_fixed(dataset(static_cast<std::size_t>(state.range(0))), hyper);
  const BoxState s{0.1, -0.2, 0.3};
  const PushAction u(0.0, 1.0, 0.3);
  for (auto _ : state) benchmark::DoNotOptimize(gp_predict(model, s, u));
}
BENCHMARK(BM_GpPredict)->Arg(326)->Arg(1000);

static void BM_MppiPlanOnce(benchmark::State& state) {
  const EnsembleModel model(random_ensemble(10));
  MppiConfig cfg;
  cfg.samples = static_cast<int>(state.range(0));
  const std::vector<RawAction> nominal(static_cast<std::size_t>(cfg.horizon), cfg.u_init);
  Rng rng(4);
  for (auto _ : state) benchmark::DoNotOptimize(mppi_plan_once(model, {-0.25, -0.25, 0.0}, nominal, cfg, rng));
}
BENCHMARK(BM_MppiPlanOnce)->Arg(10)->Arg(150)->Unit(benchmark::kMillisecond);

static void BM_HeatMap(benchmark::State& state) {
  const EnsembleModel model(random_ensemble(10));
  const SimParams p;
  for (auto _ : state) {
    benchmark::DoNotOptimize(build_heatmap(model, p, p.workspace, static_cast<int>(state.range(0)), 32, 5));
  }
}
BENCHMARK(BM_HeatMap)->Arg(10)->Arg(20)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
