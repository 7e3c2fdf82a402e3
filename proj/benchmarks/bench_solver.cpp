// End-to-end step costs: the Eulerian right-hand side, a full RK4 step, and
// grid inversion of a near-identity displacement.

#include <benchmark/benchmark.h>

#include <qpeuler/euler_solver.hpp>
#include <qpeuler/freq_lattice.hpp>
#include <qpeuler/presets.hpp>
#include <qpeuler/qp_diffeo.hpp>

namespace {

using namespace qpeuler;

ModeSetPtr canonical_box(int K) {
  Eigen::VectorXd w(2);
  w << 1.0, 1.6180339887498948482;
  w /= w.norm();
  return ModeSet::build(FrequencyMatrix::canonical(2, w), K);
}

void BM_rhs_eulerian(benchmark::State& state) {
  const int K = static_cast<int>(state.range(0));
  ModeSetPtr ms = canonical_box(K);
  const QPVectorField u = random_divfree(ms, K, 99, 0.05, 2.0).u;
  for (auto _ : state) {
    benchmark::DoNotOptimize(rhs_eulerian(u));
  }
}
BENCHMARK(BM_rhs_eulerian)->Arg(3)->Arg(6);

void BM_step_rk4(benchmark::State& state) {
  const int K = static_cast<int>(state.range(0));
  ModeSetPtr ms = canonical_box(K);
  EulerianState s{0.0, random_divfree(ms, K, 99, 0.05, 2.0).u};
  for (auto _ : state) {
    benchmark::DoNotOptimize(step_rk4(s, 1e-3));
  }
}
BENCHMARK(BM_step_rk4)->Arg(3)->Arg(6);

void BM_invert_diffeo(benchmark::State& state) {
  const int G = static_cast<int>(state.range(0));
  ModeSetPtr ms = canonical_box(2);
  const TorusGrid grid(3, G);
  QPVectorField f = random_divfree(ms, 2, 7, 1.0, 2.0).u;
  f = scale(f, 0.02 / coeff_l1(f));
  const QPDiffeo phi = QPDiffeo::make(f, grid);
  for (auto _ : state) {
    benchmark::DoNotOptimize(invert(phi, grid));
  }
}
BENCHMARK(BM_invert_diffeo)->Arg(16)->Arg(32);

}  // namespace

BENCHMARK_MAIN();
