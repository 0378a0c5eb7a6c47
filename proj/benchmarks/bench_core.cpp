#include <benchmark/benchmark.h>

#include <lrda/gmres.hpp>
#include <lrda/models.hpp>
#include <lrda/saddle.hpp>

#include <random>

namespace {

using namespace lrda;

std::mt19937_64 rng(4242);

Matrix random_matrix(Index rows, Index cols) {
  std::normal_distribution<double> normal;
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = normal(rng);
  return m;
}

LowRankFactor random_factor(Index rl, Index rr, Index k) {
  return LowRankFactor(random_matrix(rl, k), random_matrix(rr, k));
}

TimeInvariantSystem bench_system(Index n, Index steps, Index p) {
  Matrix m = ad_build_propagator(n, 1e-3, 0.1, 1.4);
  ObservationOperator obs = ObservationOperator::every_kth(n, n / p, 0);
  return TimeInvariantSystem(n, steps, obs.obs_count(),
                             CovarianceModel::exp_decay(n, 0.1, 50.0).matrix(),
                             CovarianceModel::scaled_identity(n, 1e-4).matrix(),
                             CovarianceModel::scaled_identity(obs.obs_count(), 0.01).matrix(),
                             m, obs.matrix());
}

void bm_truncate(benchmark::State& state) {
  const Index k = state.range(0);
  LowRankFactor f = random_factor(100, 200, k);
  TruncationPolicy policy{20, 1e-8};
  for (auto _ : state) benchmark::DoNotOptimize(truncate(f, policy));
}
BENCHMARK(bm_truncate)->Arg(40)->Arg(160)->Arg(640);

void bm_trace_product(benchmark::State& state) {
  const Index k = state.range(0);
  TripleBlock a(random_factor(100, 200, k), random_factor(20, 200, k),
                random_factor(100, 200, k));
  TripleBlock b(random_factor(100, 200, 20), random_factor(20, 200, 20),
                random_factor(100, 200, 20));
  for (auto _ : state) benchmark::DoNotOptimize(trace_product(a, b));
}
BENCHMARK(bm_trace_product)->Arg(20)->Arg(80)->Arg(320);

void bm_apply_saddle(benchmark::State& state) {
  TimeInvariantSystem sys = bench_system(100, 199, 20);
  TripleBlock v(random_factor(100, 200, 20), random_factor(sys.p, 200, 20),
                random_factor(100, 200, 20));
  for (auto _ : state) benchmark::DoNotOptimize(apply_saddle(sys, v));
}
BENCHMARK(bm_apply_saddle);

void bm_lr_gmres_iteration(benchmark::State& state) {
  TimeInvariantSystem sys = bench_system(100, 199, 20);
  TripleBlock rhs(random_factor(100, 200, 1), random_factor(sys.p, 200, 1),
                  LowRankFactor::zero(100, 200));
  GmresConfig cfg;
  cfg.max_iter = state.range(0);
  cfg.residual_tol = 1e-12;
  cfg.trunc = TruncationPolicy{20, 1e-8};
  auto op = [&](const TripleBlock& v) { return apply_saddle(sys, v); };
  for (auto _ : state) {
    auto result = solve_lr_gmres(op, identity_operator(), rhs,
                                 TripleBlock::zero(100, 199, sys.p), cfg);
    benchmark::DoNotOptimize(result);
  }
}
BENCHMARK(bm_lr_gmres_iteration)->Arg(5)->Arg(20)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
