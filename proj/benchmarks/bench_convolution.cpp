// Coefficient-space products at the box sizes the solver actually runs:
// multiply() is the hot loop of every right-hand side.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include <qpeuler/freq_lattice.hpp>
#include <qpeuler/qp_field.hpp>
#include <qpeuler/qp_operators.hpp>

namespace {

using namespace qpeuler;

ModeSetPtr canonical_box(int K) {
  Eigen::VectorXd w(2);
  w << 1.0, 1.6180339887498948482;
  w /= w.norm();
  return ModeSet::build(FrequencyMatrix::canonical(2, w), K);
}

QPScalar full_box_scalar(const ModeSetPtr& ms, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  std::vector<std::pair<ModeIndex, Complex>> entries;
  for (std::int64_t o = 0; o < ms->size(); ++o) {
    const std::int64_t neg = ms->negated(o);
    if (o > neg) continue;
    if (o == neg) {
      entries.emplace_back(ms->mode(o), Complex(unif(rng), 0.0));
    } else {
      const Complex c(unif(rng), unif(rng));
      entries.emplace_back(ms->mode(o), c);
      entries.emplace_back(ms->mode(neg), std::conj(c));
    }
  }
  return QPScalar::from_modes(ms, entries);
}

void BM_multiply_full_box(benchmark::State& state) {
  const int K = static_cast<int>(state.range(0));
  ModeSetPtr ms = canonical_box(K);
  const QPScalar f = full_box_scalar(ms, 1);
  const QPScalar g = full_box_scalar(ms, 2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(multiply(f, g));
  }
  state.SetItemsProcessed(state.iterations() * ms->size() * ms->size());
}
BENCHMARK(BM_multiply_full_box)->Arg(2)->Arg(4)->Arg(6);

void BM_advect_and_quadratic(benchmark::State& state) {
  const int K = static_cast<int>(state.range(0));
  ModeSetPtr ms = canonical_box(K);
  const QPVectorField u = leray_project(QPVectorField(
      std::vector<QPScalar>{full_box_scalar(ms, 3), full_box_scalar(ms, 4)}));
  for (auto _ : state) {
    benchmark::DoNotOptimize(advect_and_quadratic(u));
  }
}
BENCHMARK(BM_advect_and_quadratic)->Arg(4)->Arg(6);

}  // namespace

BENCHMARK_MAIN();
