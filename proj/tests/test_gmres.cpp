#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <lrda/gmres.hpp>
#include <lrda/models.hpp>
#include <lrda/saddle.hpp>

#include <Eigen/LU>

#include "support/dense_gmres.hpp"
#include "support/random_inputs.hpp"

using namespace lrda;
using lrda::testing::dense_gmres;
using lrda::testing::make_rng;
using lrda::testing::random_system;
using lrda::testing::random_triple;

namespace {

BlockOperator saddle_operator(const TimeInvariantSystem& sys) {
  return [&sys](const TripleBlock& v) { return apply_saddle(sys, v); };
}

// The small preconditioner-comparison setup: advection-diffusion propagator,
// exponential-decay background covariance, strided observations.
TimeInvariantSystem small_ad_system(Index n, Index steps, Index obs_stride,
                                    Index obs_offset) {
  Matrix m = ad_build_propagator(n, 1e-3, 0.1, 1.4);
  ObservationOperator obs = ObservationOperator::every_kth(n, obs_stride, obs_offset);
  CovarianceModel b = CovarianceModel::exp_decay(n, 0.1, 50.0);
  CovarianceModel q = CovarianceModel::scaled_identity(n, 1e-4);
  CovarianceModel r = CovarianceModel::scaled_identity(obs.obs_count(), 0.01);
  return TimeInvariantSystem(n, steps, obs.obs_count(), b.matrix(), q.matrix(), r.matrix(),
                             m, obs.matrix());
}

}  // namespace

TEST_CASE("identity system converges in one iteration") {
  auto rng = make_rng(41);
  TripleBlock rhs = random_triple(rng, 5, 3, 2, 2);
  GmresConfig cfg;
  cfg.residual_tol = 1e-12;
  auto [x, report] = solve_lr_gmres(identity_operator(), identity_operator(), rhs,
                                    TripleBlock::zero(5, 3, 2), cfg);
  CHECK(report.converged);
  CHECK(report.iterations == 1);
  CHECK((stack_dense(x) - stack_dense(rhs)).norm() <= 1e-12 * stack_dense(rhs).norm());
}

TEST_CASE("restart stub raises") {
  auto rng = make_rng(42);
  TripleBlock rhs = random_triple(rng, 4, 2, 2, 1);
  GmresConfig cfg;
  cfg.restart = 5;
  CHECK_THROWS_AS(solve_lr_gmres(identity_operator(), identity_operator(), rhs,
                                 TripleBlock::zero(4, 2, 2), cfg),
                  std::runtime_error);
}

TEST_CASE("untruncated run tracks the dense reference solver") {
  auto rng = make_rng(43);
  TimeInvariantSystem sys = random_system(rng, 4, 3, 2);
  Matrix a = assemble_dense(sys);
  TripleBlock rhs(testing::random_factor(rng, 4, 4, 2), testing::random_factor(rng, 2, 4, 2),
                  LowRankFactor::zero(4, 4));

  GmresConfig cfg;
  cfg.max_iter = 12;
  cfg.residual_tol = 1e-14;
  GmresState state;
  auto [x, report] = solve_lr_gmres(saddle_operator(sys), identity_operator(), rhs,
                                    TripleBlock::zero(4, 3, 2), cfg, &state);

  auto ref = dense_gmres(a, Matrix::Identity(a.rows(), a.cols()), stack_dense(rhs),
                         Vector::Zero(a.rows()), 12, 1e-14);

  REQUIRE(report.residual_history.size() >= 10);
  CHECK(state.hessenberg.cols() == report.iterations);
  CHECK(state.hessenberg.rows() == report.iterations + 1);
  CHECK(report.initial_residual ==
        doctest::Approx(ref.initial_residual).epsilon(1e-10));
  for (std::size_t k = 0; k < std::min(report.residual_history.size(),
                                       ref.residual_history.size());
       ++k) {
    const double got = report.residual_history[k];
    const double want = ref.residual_history[k];
    CHECK(std::abs(got - want) <=
          1e-6 * want + 1e-10 * report.initial_residual);
  }

  SUBCASE("rotated residuals are non-increasing") {
    for (std::size_t k = 1; k < report.residual_history.size(); ++k)
      CHECK(report.residual_history[k] <=
            report.residual_history[k - 1] * (1.0 + 1e-12));
  }

  SUBCASE("basis blocks are trace-orthonormal") {
    for (std::size_t i = 0; i < state.basis.size() && i < 10; ++i)
      for (std::size_t j = 0; j <= i; ++j) {
        const double want = i == j ? 1.0 : 0.0;
        CHECK(std::abs(trace_product(state.basis[i], state.basis[j]) - want) <= 1e-8);
      }
  }
}

TEST_CASE("untruncated solve matches the direct solution") {
  auto rng = make_rng(44);
  TimeInvariantSystem sys = random_system(rng, 4, 3, 2);
  Matrix a = assemble_dense(sys);
  TripleBlock rhs(testing::random_factor(rng, 4, 4, 2), testing::random_factor(rng, 2, 4, 2),
                  LowRankFactor::zero(4, 4));

  GmresConfig cfg;
  cfg.max_iter = 100;
  cfg.residual_tol = 1e-12;
  auto [x, report] = solve_lr_gmres(saddle_operator(sys), identity_operator(), rhs,
                                    TripleBlock::zero(4, 3, 2), cfg);
  CHECK(report.converged);
  Vector want = a.partialPivLu().solve(stack_dense(rhs));
  CHECK((stack_dense(x) - want).norm() <= 1e-8 * (1.0 + want.norm()));
}

TEST_CASE("solution is invariant under redundant right-hand side rank") {
  auto rng = make_rng(45);
  TimeInvariantSystem sys = random_system(rng, 4, 3, 2);
  TripleBlock rhs = random_triple(rng, 4, 3, 2, 2);
  TripleBlock rhs_redundant = concat(scale(rhs, 0.25), scale(rhs, 0.75));

  GmresConfig cfg;
  cfg.max_iter = 60;
  cfg.residual_tol = 1e-12;
  auto [x1, r1] = solve_lr_gmres(saddle_operator(sys), identity_operator(), rhs,
                                 TripleBlock::zero(4, 3, 2), cfg);
  auto [x2, r2] = solve_lr_gmres(saddle_operator(sys), identity_operator(), rhs_redundant,
                                 TripleBlock::zero(4, 3, 2), cfg);
  CHECK((stack_dense(x1) - stack_dense(x2)).norm() <= 1e-10 * (1.0 + stack_dense(x1).norm()));
}

TEST_CASE("residual_true") {
  auto rng = make_rng(46);

  SUBCASE("zero at the exact solution of the identity system") {
    TripleBlock rhs = random_triple(rng, 4, 2, 2, 2);
    CHECK(residual_true(identity_operator(), rhs, rhs) <= 1e-14);
  }

  SUBCASE("equals the right-hand side norm at x0 = 0") {
    TripleBlock rhs = random_triple(rng, 4, 2, 2, 2);
    const double want = std::sqrt(trace_product(rhs, rhs));
    CHECK(residual_true(identity_operator(), rhs, TripleBlock::zero(4, 2, 2)) ==
          doctest::Approx(want).epsilon(1e-12));
  }

  SUBCASE("matches the rotated residual after five untruncated iterations") {
    TimeInvariantSystem sys = random_system(rng, 4, 3, 2);
    TripleBlock rhs = random_triple(rng, 4, 3, 2, 2);
    GmresConfig cfg;
    cfg.max_iter = 5;
    cfg.residual_tol = 1e-14;
    auto [x, report] = solve_lr_gmres(saddle_operator(sys), identity_operator(), rhs,
                                      TripleBlock::zero(4, 3, 2), cfg);
    REQUIRE(report.iterations == 5);
    const double rotated = report.residual_history.back();
    const double actual = residual_true(saddle_operator(sys), rhs, x);
    CHECK(std::abs(actual - rotated) <= 1e-8 * (1.0 + rotated));
  }
}

TEST_CASE("breakdown with an unreachable right-hand side sets the flag") {
  // Rank-one projector: the Krylov space saturates after two steps while the
  // right-hand side keeps a component outside the operator range.
  Matrix e1 = Matrix::Zero(3, 1);
  e1(0, 0) = 1.0;
  Matrix t1 = Matrix::Zero(4, 1);
  t1(0, 0) = 1.0;
  TripleBlock u(LowRankFactor(e1, t1), LowRankFactor::zero(2, 4),
                LowRankFactor::zero(3, 4));
  TripleBlock s(LowRankFactor::zero(3, 4), LowRankFactor::zero(2, 4),
                LowRankFactor(e1, t1));
  BlockOperator projector = [u](const TripleBlock& v) {
    return scale(u, trace_product(v, u));
  };

  GmresConfig cfg;
  cfg.max_iter = 10;
  cfg.residual_tol = 1e-6;
  auto [x, report] =
      solve_lr_gmres(projector, identity_operator(), concat(u, s),
                     TripleBlock::zero(3, 3, 2), cfg);
  CHECK(report.breakdown);
  CHECK_FALSE(report.converged);
  CHECK(report.iterations == 2);
  // the unreachable component remains in the residual
  const double res = residual_true(projector, concat(u, s), x);
  CHECK(res >= 1.0 - 1e-10);
}

TEST_CASE("aggressive truncation stalls the residual on the 440 system") {
  auto rng = make_rng(47);
  TimeInvariantSystem sys = small_ad_system(10, 19, 5, 4);
  REQUIRE(sys.saddle_dim() == 440);

  TripleBlock rhs(testing::random_factor(rng, 10, 20, 3), testing::random_factor(rng, 2, 20, 3),
                  LowRankFactor::zero(10, 20));
  GmresConfig cfg;
  cfg.max_iter = 20;
  cfg.residual_tol = 1e-6;
  cfg.trunc = TruncationPolicy{5, 1e-8};
  auto [x, report] = solve_lr_gmres(saddle_operator(sys), identity_operator(), rhs,
                                    TripleBlock::zero(10, 19, 2), cfg);
  CHECK_FALSE(report.converged);
  CHECK(report.residual_history.back() > 1e-2 * report.initial_residual);
  CHECK(report.rank_dx <= 5);
}
