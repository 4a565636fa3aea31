// Serial reference vs OpenMP Monte Carlo kernels.

#include <benchmark/benchmark.h>
#include <omp.h>

#include <vector>

#include "rgeom/mc.hpp"
#include "rgeom/rng.hpp"

using namespace rgeom;

namespace {

// Decay-experiment shape: 256 nodes, n up to 1024, rank-limited factor.
struct Problem {
  Matrix mean;
  Matrix factor;
  Vector weights;
  Matrix centers;
  std::vector<Eigen::Index> n_list{8, 16, 32, 64, 128, 256, 512, 1024};

  explicit Problem(Eigen::Index rank) {
    const Eigen::Index K = 256;
    Rng rng(1);
    mean.resize(K, 1024);
    factor.resize(K, rank);
    for (Eigen::Index i = 0; i < mean.size(); ++i) mean.data()[i] = 0.04 + 0.01 * rng.normal();
    for (Eigen::Index i = 0; i < factor.size(); ++i) factor.data()[i] = 1e-3 * rng.normal();
    weights = Vector::Constant(K, 1.0 / (K - 1));
    weights[0] = weights[K - 1] = 0.5 / (K - 1);
    centers = Matrix::Constant(K, 8, 0.04);
  }

  mc::PathLengthProblem view() const { return {mean, factor, weights, n_list, &centers}; }
};

const Problem& problem() {
  static const Problem p(32);
  return p;
}

void BM_PathLengthsReference(benchmark::State& state) {
  const auto p = problem().view();
  const int samples = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(mc::reference::path_lengths(p, samples, 0, false));
  state.SetItemsProcessed(state.iterations() * samples);
}

void BM_PathLengthsParallel(benchmark::State& state) {
  const auto p = problem().view();
  const int samples = static_cast<int>(state.range(0));
  omp_set_num_threads(static_cast<int>(state.range(1)));
  for (auto _ : state) benchmark::DoNotOptimize(mc::path_lengths(p, samples, 0, false));
  state.SetItemsProcessed(state.iterations() * samples);
}

void BM_NormSquaresReference(benchmark::State& state) {
  const Eigen::Index n = state.range(0);
  for (auto _ : state) benchmark::DoNotOptimize(mc::reference::norm_squares(mc::Family::Gaussian, n, 20000, 0));
  state.SetItemsProcessed(state.iterations() * 20000);
}

void BM_NormSquaresParallel(benchmark::State& state) {
  const Eigen::Index n = state.range(0);
  omp_set_num_threads(static_cast<int>(state.range(1)));
  for (auto _ : state) benchmark::DoNotOptimize(mc::norm_squares(mc::Family::Gaussian, n, 20000, 0));
  state.SetItemsProcessed(state.iterations() * 20000);
}

}  // namespace

BENCHMARK(BM_PathLengthsReference)->Arg(200)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_PathLengthsParallel)->Args({200, 1})->Args({200, 4})->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_NormSquaresReference)->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_NormSquaresParallel)
    ->Args({100, 1})
    ->Args({100, 4})
    ->Args({1000, 1})
    ->Args({1000, 4})
    ->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
