#pragma once

#include <Eigen/Dense>

#include <optional>

namespace lrda {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Rank-control policy for truncated SVD compression.
///
/// A singular value is kept when sigma_i >= rel_tol * sigma_1; if max_rank is
/// set, at most max_rank values survive. Exactly-zero (and numerically zero,
/// below kRankFloor * sigma_1) singular values are always dropped, so a
/// lossless policy still deflates redundant columns.
struct TruncationPolicy {
  std::optional<Index> max_rank{};
  double rel_tol{0.0};

  static TruncationPolicy lossless() { return {}; }
  static TruncationPolicy fixed_rank(Index r, double tol = 0.0) {
    return TruncationPolicy{r, tol};
  }

  /// Throws std::invalid_argument unless rel_tol in [0,1) and max_rank >= 1.
  void validate() const;
};

/// Relative floor below which singular values count as numerically zero.
inline constexpr double kRankFloor = 1e-14;

/// Size guard for materialising factors as dense matrices.
inline constexpr Index kDenseGuard = 10'000'000;

/// A matrix held in factored form left * right^T.
///
/// left is rows_left x k, right is rows_right x k; k = 0 encodes the zero
/// matrix. Values are immutable after construction.
class LowRankFactor {
 public:
  LowRankFactor() = default;
  LowRankFactor(Matrix left, Matrix right);

  static LowRankFactor zero(Index rows_left, Index rows_right) {
    return LowRankFactor(Matrix(rows_left, 0), Matrix(rows_right, 0));
  }

  const Matrix& left() const { return left_; }
  const Matrix& right() const { return right_; }
  Index rows_left() const { return left_.rows(); }
  Index rows_right() const { return right_.rows(); }
  Index rank() const { return left_.cols(); }

 private:
  Matrix left_{0, 0};
  Matrix right_{0, 0};
};

/// Concatenates the factors of a and b; the represented value is the sum
/// a.value + b.value, exactly.
LowRankFactor concat(const LowRankFactor& a, const LowRankFactor& b);

/// Scales the represented value by s. The scale is folded into the left
/// factor only, keeping the right factor untouched.
LowRankFactor scale(const LowRankFactor& a, double s);

/// Frobenius-optimal rank reduction (QR factors + small SVD). The surviving
/// singular values are folded into the left factor; the right factor keeps
/// orthonormal columns.
LowRankFactor truncate(const LowRankFactor& a, const TruncationPolicy& policy);

/// Materialises the represented value. Guarded by kDenseGuard.
Matrix to_dense(const LowRankFactor& a);

/// Compresses a dense matrix into factored form under the given policy.
LowRankFactor from_dense(const Matrix& m, const TruncationPolicy& policy);

/// trace((A value)^T (B value)) evaluated through the k x k Gram matrices of
/// the factors; never forms rows_right x rows_right products.
double trace_product(const LowRankFactor& a, const LowRankFactor& b);

/// Singular values of the represented value, descending, computed through the
/// thin QR factors. Diagnostic for how compressible a computed solution is.
Vector singular_values(const LowRankFactor& a);

/// The three factored components of a saddle-system vector: the model-error
/// adjoint block (n x (N+1)), the observation adjoint block (p x (N+1)) and
/// the state increment block (n x (N+1)).
struct TripleBlock {
  LowRankFactor lam;
  LowRankFactor mu;
  LowRankFactor dx;

  TripleBlock() = default;
  TripleBlock(LowRankFactor lam_, LowRankFactor mu_, LowRankFactor dx_);

  static TripleBlock zero(Index n, Index steps, Index p) {
    return TripleBlock(LowRankFactor::zero(n, steps + 1),
                       LowRankFactor::zero(p, steps + 1),
                       LowRankFactor::zero(n, steps + 1));
  }

  Index state_dim() const { return lam.rows_left(); }
  Index obs_dim() const { return mu.rows_left(); }
  Index time_dim() const { return lam.rows_right(); }
};

TripleBlock concat(const TripleBlock& a, const TripleBlock& b);
TripleBlock scale(const TripleBlock& a, double s);
TripleBlock truncate(const TripleBlock& a, const TruncationPolicy& policy);

/// Inner product of the stacked blocks, sum of the per-block trace products.
double trace_product(const TripleBlock& a, const TripleBlock& b);

}  // namespace lrda
