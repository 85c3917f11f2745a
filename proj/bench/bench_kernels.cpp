// Serial reference vs OpenMP path for the hot kernels. Arg(0) is serial,
// Arg(1) parallel; both compute bit-identical results.

#include "ucov/datagen.hpp"
#include "ucov/estimator.hpp"
#include "ucov/hoeffding.hpp"
#include "ucov/parallel.hpp"

#include <benchmark/benchmark.h>

using namespace ucov;

namespace {

par::Exec exec_of(const benchmark::State& state) { return state.range(0) ? par::Exec::Parallel : par::Exec::Serial; }

void BM_Enumerate(benchmark::State& state) {
  const Sample sample = draw_iid(gaussian_kl({1.0, 0.5, 0.25}), 20, 1);
  EstimatorConfig cfg;
  cfg.m = 8;  // 125970 subsets
  cfg.algorithm = Algorithm::Enumerate;
  for (auto _ : state) benchmark::DoNotOptimize(estimate(sample, cfg, exec_of(state)).grid()(0, 0));
  state.SetItemsProcessed(state.iterations() * 125970);
}
BENCHMARK(BM_Enumerate)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_SignKernelEnumerate(benchmark::State& state) {
  const Sample sample = draw_iid(gaussian_kl({1.0, 0.5}), 18, 2);
  EstimatorConfig cfg;
  cfg.m = 6;
  cfg.kernel = KernelKind::Sign;
  for (auto _ : state) benchmark::DoNotOptimize(estimate(sample, cfg, exec_of(state)).grid()(0, 0));
}
BENCHMARK(BM_SignKernelEnumerate)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_ClosedForm(benchmark::State& state) {
  const Sample sample = draw_iid(gaussian_kl(halving_spectrum(8)), static_cast<int>(state.range(0)), 3);
  EstimatorConfig cfg;
  cfg.m = 5;
  cfg.algorithm = Algorithm::ClosedForm;
  for (auto _ : state) benchmark::DoNotOptimize(estimate(sample, cfg).grid()(0, 0));
}
BENCHMARK(BM_ClosedForm)->Arg(100)->Arg(10000);

void BM_PopulationOracle(benchmark::State& state) {
  const auto gen = student_t(5.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(population_cm_oracle(gen, 3, 200000, 4, std::nullopt, exec_of(state)).value.grid()(0, 0));
  }
}
BENCHMARK(BM_PopulationOracle)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_HajekVariance(benchmark::State& state) {
  const auto gen = student_t(5.0);
  const KernelSpec spec(2, Element::zero(gen.space));
  const Element e(gen.space, {1.0});
  for (auto _ : state) {
    benchmark::DoNotOptimize(hajek_variance(spec, gen, e, e, 200000, 5, nullptr, exec_of(state)).value);
  }
}
BENCHMARK(BM_HajekVariance)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
