#include <benchmark/benchmark.h>

#include <random>

#include "tvar/model.hpp"
#include "tvar/preprocess.hpp"
#include "tvar/sampler.hpp"

namespace {

using tvar::Matrix;

Matrix random_matrix(Eigen::Index r, Eigen::Index c, std::uint64_t seed) {
  tvar::Rng rng(seed);
  return rng.normal_matrix(r, c);
}

tvar::SyntheticData chicago_scale(Eigen::Index T) {
  tvar::SyntheticSpec s;
  s.dims = {28, 22, 11, 5};
  s.T = T;
  s.seed = 2019;
  s.spectral_target = 0.8;
  return tvar::simulate(s);
}

void BM_BilinearStep(benchmark::State& state) {
  const auto K = state.range(0), Q = state.range(1);
  const Matrix a = random_matrix(K, K, 1), b = random_matrix(Q, Q, 2), y = random_matrix(K, Q, 3);
  for (auto _ : state) benchmark::DoNotOptimize(tvar::bilinear_step(a, b, y));
}
BENCHMARK(BM_BilinearStep)->Args({4, 3})->Args({28, 22});

void BM_KronMatVec(benchmark::State& state) {
  const auto K = state.range(0), Q = state.range(1);
  const Matrix a = random_matrix(K, K, 1), b = random_matrix(Q, Q, 2);
  const tvar::Vector y = tvar::vec(random_matrix(K, Q, 3));
  for (auto _ : state) {
    const Matrix k = tvar::kron(b, a);
    benchmark::DoNotOptimize(k * y);
  }
}
BENCHMARK(BM_KronMatVec)->Args({4, 3})->Args({28, 22});

void BM_LogLikelihood(benchmark::State& state) {
  const auto d = chicago_scale(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(tvar::log_likelihood(d.truth, d.data));
  state.SetItemsProcessed(state.iterations() * (state.range(0) - 1));
}
BENCHMARK(BM_LogLikelihood)->Arg(228)->Unit(benchmark::kMillisecond);

void BM_GibbsSweepChicagoScale(benchmark::State& state) {
  const auto d = chicago_scale(204);
  tvar::ModelState s = tvar::initial_state(d.data.values, d.truth.dims());
  tvar::Rng rng(7);
  const tvar::GibbsConfig cfg;
  for (auto _ : state) tvar::gibbs_sweep(s, d.data.values, cfg, rng);
}
BENCHMARK(BM_GibbsSweepChicagoScale)->Unit(benchmark::kMillisecond);

void BM_GibbsSweepSmall(benchmark::State& state) {
  tvar::SyntheticSpec spec;
  spec.dims = {4, 3, 2, 2};
  spec.T = 400;
  const auto d = tvar::simulate(spec);
  tvar::ModelState s = tvar::initial_state(d.data.values, spec.dims);
  tvar::Rng rng(7);
  const tvar::GibbsConfig cfg;
  for (auto _ : state) tvar::gibbs_sweep(s, d.data.values, cfg, rng);
}
BENCHMARK(BM_GibbsSweepSmall)->Unit(benchmark::kMicrosecond);

void BM_FitAdjust(benchmark::State& state) {
  const auto d = chicago_scale(228);
  tvar::LogCounts lc;
  lc.slices = d.data.values;
  lc.category_labels.resize(28);
  lc.district_labels.resize(22);
  for (auto _ : state) benchmark::DoNotOptimize(tvar::fit_adjust(lc));
}
BENCHMARK(BM_FitAdjust)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
