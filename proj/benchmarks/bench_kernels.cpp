#include <benchmark/benchmark.h>

#include "hodo/blowup.hpp"
#include "hodo/hodograph.hpp"
#include "hodo/matops.hpp"

using namespace hodo;

namespace {

Matrix test_matrix(int n) {
  Matrix a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = std::sin(1.0 + 3 * i + j) * 0.8;
  return a;
}

void BM_MatExp(benchmark::State& state) {
  const Matrix a = test_matrix(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(mat_exp(a, 0.7));
}
BENCHMARK(BM_MatExp)->Arg(2)->Arg(3)->Arg(4)->Arg(8);

void BM_Phi1(benchmark::State& state) {
  Matrix a = test_matrix(static_cast<int>(state.range(0)));
  a.col(0).setZero();  // singular, so the inverse formula is unavailable
  for (auto _ : state) benchmark::DoNotOptimize(phi1(a, 0.7));
}
BENCHMARK(BM_Phi1)->Arg(2)->Arg(3)->Arg(4)->Arg(8);

void BM_SolveU_Coriolis(benchmark::State& state) {
  const HodographProblem p(presets::coriolis2d(1.0, Vector::Zero(2)), InitialData(Gauss2DCoriolis{}));
  Vector x(2);
  x << 0.6, 0.5;
  for (auto _ : state) benchmark::DoNotOptimize(solve_u(p, 0.5, x));
}
BENCHMARK(BM_SolveU_Coriolis);

void BM_Sheet1D(benchmark::State& state) {
  const HodographProblem p(presets::scalar1d(0.5, 1.0), InitialData(Tanh1D{1, 1}));
  const auto grid = m_grid(p.data(), static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(sheet_1d(p, grid));
}
BENCHMARK(BM_Sheet1D)->Arg(201)->Arg(2001);

void BM_SheetsCoriolis2D(benchmark::State& state) {
  const HodographProblem p(presets::coriolis2d(1.0, Vector::Zero(2)), InitialData(Gauss2DCoriolis{}));
  const auto grid = m_grid(p.data(), static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(sheets_coriolis2d(p, grid));
}
BENCHMARK(BM_SheetsCoriolis2D)->Arg(41);

}  // namespace

BENCHMARK_MAIN();
