#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <lrda/low_rank.hpp>

#include <Eigen/SVD>

#include "support/random_inputs.hpp"

using namespace lrda;
using lrda::testing::make_rng;
using lrda::testing::random_factor;
using lrda::testing::random_matrix;
using lrda::testing::random_triple;

namespace {

double max_abs(const Matrix& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

// Dense factor of known rank r: product of two thin Gaussian matrices.
LowRankFactor rank_limited_factor(std::mt19937_64& rng, Index rows_left, Index rows_right,
                                  Index true_rank, Index stored_rank) {
  Matrix base_left = random_matrix(rng, rows_left, true_rank);
  Matrix base_right = random_matrix(rng, rows_right, true_rank);
  Matrix mix = random_matrix(rng, true_rank, stored_rank);
  return LowRankFactor(base_left * mix, base_right * mix);
}

}  // namespace

TEST_CASE("concat is addition of the represented values") {
  auto rng = make_rng(11);

  SUBCASE("zero factor is the additive identity") {
    LowRankFactor z = LowRankFactor::zero(5, 3);
    LowRankFactor b = random_factor(rng, 5, 3, 2);
    CHECK(max_abs(to_dense(concat(z, b)) - to_dense(b)) == 0.0);
    CHECK(max_abs(to_dense(concat(b, z)) - to_dense(b)) == 0.0);
  }

  SUBCASE("concat of a factor with itself doubles the value") {
    Matrix w(2, 1), v(2, 1);
    w << 1, 0;
    v << 1, 0;
    LowRankFactor a(w, v);
    LowRankFactor c = concat(a, a);
    CHECK(c.rank() == 2);
    CHECK(max_abs(to_dense(c) - 2.0 * to_dense(a)) == 0.0);
  }

  SUBCASE("dense-addition oracle on random factors") {
    for (int rep = 0; rep < 20; ++rep) {
      LowRankFactor a = random_factor(rng, 5, 3, 2);
      LowRankFactor b = random_factor(rng, 5, 3, 2);
      CHECK(max_abs(to_dense(concat(a, b)) - (to_dense(a) + to_dense(b))) < 1e-14);
    }
  }

  SUBCASE("dimension mismatch names the offending axis") {
    LowRankFactor a = random_factor(rng, 5, 3, 2);
    LowRankFactor b = random_factor(rng, 4, 3, 2);
    LowRankFactor c = random_factor(rng, 5, 4, 2);
    CHECK_THROWS_WITH_AS(concat(a, b), doctest::Contains("left-factor row mismatch"),
                         std::invalid_argument);
    CHECK_THROWS_WITH_AS(concat(a, c), doctest::Contains("right-factor row mismatch"),
                         std::invalid_argument);
  }
}

TEST_CASE("scale acts on the left factor only") {
  auto rng = make_rng(12);
  LowRankFactor a = random_factor(rng, 6, 4, 3);

  CHECK(max_abs(to_dense(scale(a, 1.0)) - to_dense(a)) == 0.0);
  CHECK(max_abs(to_dense(scale(a, 0.0))) == 0.0);
  CHECK(max_abs(to_dense(scale(a, -2.0)) + 2.0 * to_dense(a)) < 1e-14);
  CHECK(scale(a, -2.0).right() == a.right());
}

TEST_CASE("truncate computes the Frobenius-optimal rank reduction") {
  auto rng = make_rng(13);

  SUBCASE("duplicate columns deflate to the true rank") {
    Matrix w = random_matrix(rng, 6, 1);
    Matrix v = random_matrix(rng, 4, 1);
    Matrix w2(6, 2), v2(4, 2);
    w2 << w, w;
    v2 << v, v;
    LowRankFactor a(w2, v2);
    LowRankFactor t = truncate(a, TruncationPolicy{8, 0.0});
    CHECK(t.rank() == 1);
    CHECK(max_abs(to_dense(t) - to_dense(a)) < 1e-14);
  }

  SUBCASE("exact-rank truncation preserves the value") {
    LowRankFactor a = rank_limited_factor(rng, 10, 6, 4, 6);
    LowRankFactor t = truncate(a, TruncationPolicy{4, 0.0});
    CHECK(t.rank() == 4);
    CHECK(max_abs(to_dense(t) - to_dense(a)) < 1e-12);
  }

  SUBCASE("Eckart-Young: error equals the tail singular value norm") {
    LowRankFactor a = rank_limited_factor(rng, 10, 6, 4, 6);
    Matrix dense = to_dense(a);
    Eigen::BDCSVD<Matrix> svd(dense);
    const Vector& s = svd.singularValues();
    LowRankFactor t = truncate(a, TruncationPolicy{2, 0.0});
    const double err = (to_dense(t) - dense).norm();
    const double expected = std::sqrt(s(2) * s(2) + s(3) * s(3));
    CHECK(err == doctest::Approx(expected).epsilon(1e-10));
  }

  SUBCASE("zero-rank input passes through") {
    LowRankFactor z = LowRankFactor::zero(7, 5);
    CHECK(truncate(z, TruncationPolicy::lossless()).rank() == 0);
  }

  SUBCASE("never increases rank; lossless policy preserves the value") {
    for (int rep = 0; rep < 20; ++rep) {
      LowRankFactor a = random_factor(rng, 8, 5, 4);
      LowRankFactor t = truncate(a, TruncationPolicy::lossless());
      CHECK(t.rank() <= a.rank());
      CHECK(t.rank() <= std::min(a.rows_left(), a.rows_right()));
      const double scale_ref = to_dense(a).norm();
      CHECK(max_abs(to_dense(t) - to_dense(a)) < 1e-12 * (1.0 + scale_ref));
    }
  }

  SUBCASE("right factor keeps orthonormal columns") {
    LowRankFactor a = random_factor(rng, 8, 5, 4);
    LowRankFactor t = truncate(a, TruncationPolicy::lossless());
    Matrix gram = t.right().transpose() * t.right();
    CHECK(max_abs(gram - Matrix::Identity(t.rank(), t.rank())) < 1e-12);
  }

  SUBCASE("policy validation") {
    LowRankFactor a = random_factor(rng, 4, 4, 2);
    CHECK_THROWS_AS(truncate(a, TruncationPolicy{std::nullopt, 1.0}), std::invalid_argument);
    CHECK_THROWS_AS(truncate(a, TruncationPolicy{0, 0.0}), std::invalid_argument);
  }
}

TEST_CASE("trace_product evaluates the stacked inner product via Gram matrices") {
  auto rng = make_rng(14);

  SUBCASE("three canonical unit blocks give 3") {
    Matrix e_left = Matrix::Zero(4, 1);
    e_left(0, 0) = 1.0;
    Matrix e_right = Matrix::Zero(5, 1);
    e_right(0, 0) = 1.0;
    Matrix p_left = Matrix::Zero(3, 1);
    p_left(0, 0) = 1.0;
    TripleBlock a(LowRankFactor(e_left, e_right), LowRankFactor(p_left, e_right),
                  LowRankFactor(e_left, e_right));
    CHECK(trace_product(a, a) == doctest::Approx(3.0));
  }

  SUBCASE("zero triple gives 0") {
    TripleBlock a = random_triple(rng, 4, 3, 2, 2);
    TripleBlock z = TripleBlock::zero(4, 3, 2);
    CHECK(trace_product(a, z) == 0.0);
  }

  SUBCASE("vectorisation oracle") {
    for (int rep = 0; rep < 20; ++rep) {
      TripleBlock a = random_triple(rng, 7, 4, 3, 3);
      TripleBlock b = random_triple(rng, 7, 4, 3, 2);
      double direct = 0.0;
      direct += (to_dense(a.lam).array() * to_dense(b.lam).array()).sum();
      direct += (to_dense(a.mu).array() * to_dense(b.mu).array()).sum();
      direct += (to_dense(a.dx).array() * to_dense(b.dx).array()).sum();
      CHECK(trace_product(a, b) ==
            doctest::Approx(direct).epsilon(1e-12));
    }
  }

  SUBCASE("symmetry and positivity") {
    for (int rep = 0; rep < 20; ++rep) {
      TripleBlock a = random_triple(rng, 5, 3, 2, 2);
      TripleBlock b = random_triple(rng, 5, 3, 2, 3);
      const double ab = trace_product(a, b);
      const double ba = trace_product(b, a);
      CHECK(std::abs(ab - ba) <= 1e-12 * (1.0 + std::abs(ab)));
      const double aa = trace_product(a, a);
      CHECK(aa >= 0.0);
      const double frob = to_dense(a.lam).squaredNorm() + to_dense(a.mu).squaredNorm() +
                          to_dense(a.dx).squaredNorm();
      CHECK(aa == doctest::Approx(frob).epsilon(1e-12));
    }
  }

  SUBCASE("dimension mismatch throws") {
    TripleBlock a = random_triple(rng, 5, 3, 2, 2);
    TripleBlock b = random_triple(rng, 5, 3, 3, 2);
    CHECK_THROWS_AS(trace_product(a, b), std::invalid_argument);
  }
}

TEST_CASE("singular values through the factors match the dense spectrum") {
  auto rng = make_rng(16);
  LowRankFactor a = random_factor(rng, 8, 6, 4);
  Vector through_factors = singular_values(a);
  Eigen::BDCSVD<Matrix> svd(to_dense(a));
  REQUIRE(through_factors.size() >= 4);
  for (Index i = 0; i < 4; ++i)
    CHECK(through_factors(i) ==
          doctest::Approx(svd.singularValues()(i)).epsilon(1e-12));
  CHECK(singular_values(LowRankFactor::zero(5, 4)).size() == 0);
}

TEST_CASE("to_dense / from_dense round trip") {
  auto rng = make_rng(15);

  SUBCASE("zero-rank factor is the zero matrix") {
    CHECK(max_abs(to_dense(LowRankFactor::zero(4, 6))) == 0.0);
  }

  SUBCASE("identity recovers full rank") {
    LowRankFactor f = from_dense(Matrix::Identity(4, 4), TruncationPolicy::lossless());
    CHECK(f.rank() == 4);
    CHECK(max_abs(to_dense(f) - Matrix::Identity(4, 4)) < 1e-14);
  }

  SUBCASE("random rank-3 round trip") {
    Matrix m = random_matrix(rng, 9, 3) * random_matrix(rng, 3, 7);
    LowRankFactor f = from_dense(m, TruncationPolicy::lossless());
    CHECK(f.rank() == 3);
    CHECK(max_abs(to_dense(f) - m) <= 1e-12);
  }

  SUBCASE("dense guard") {
    LowRankFactor f = LowRankFactor::zero(100000, 101);
    CHECK_THROWS_WITH_AS(to_dense(f), doctest::Contains("dense guard"),
                         std::invalid_argument);
  }
}
