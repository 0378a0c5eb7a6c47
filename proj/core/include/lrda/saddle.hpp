#pragma once

#include "lrda/low_rank.hpp"

#include <vector>

namespace lrda {

/// Saddle operator data with constant model, observation and covariance
/// matrices across the window. B, Q, R must be symmetric positive definite
/// (verified by Cholesky at construction).
struct TimeInvariantSystem {
  Index n{0};
  Index steps{0};  // number of window steps N; the window holds N+1 states
  Index p{0};
  Matrix B, Q, R, M, H;

  TimeInvariantSystem(Index n, Index steps, Index p, Matrix B, Matrix Q, Matrix R,
                      Matrix M, Matrix H);

  Index saddle_dim() const { return (2 * n + p) * (steps + 1); }
};

/// Saddle operator data with per-step matrices. Q holds Q_1..Q_N, M holds
/// M_1..M_N; R and H hold entries for steps 0..N. The observation count p is
/// constant across the window.
struct TimeVaryingSystem {
  Index n{0};
  Index steps{0};
  Index p{0};
  Matrix B;
  std::vector<Matrix> Q;
  std::vector<Matrix> R;
  std::vector<Matrix> M;
  std::vector<Matrix> H;

  TimeVaryingSystem(Index n, Index steps, Index p, Matrix B, std::vector<Matrix> Q,
                    std::vector<Matrix> R, std::vector<Matrix> M, std::vector<Matrix> H);

  Index saddle_dim() const { return (2 * n + p) * (steps + 1); }
};

/// Row operations realising the (N+1)x(N+1) structure matrices on right
/// factors; none of them ever stores the structure matrix.
///
/// shift_rows_down_negated:  row 0 -> 0,      row i -> -row_{i-1}
/// shift_rows_up_negated:    row N -> 0,      row i -> -row_{i+1}
/// keep_row / keep_first_row: zero every row except one
Matrix keep_first_row(const Matrix& v);
Matrix drop_first_row(const Matrix& v);
Matrix keep_row(const Matrix& v, Index i);
Matrix shift_rows_down_negated(const Matrix& v);
Matrix shift_rows_up_negated(const Matrix& v);
Matrix sub_shift_negated(const Matrix& v, Index i);    // row i -> -row_{i-1}, rest 0
Matrix sub_shift_negated_t(const Matrix& v, Index i);  // row i-1 -> -row_i, rest 0

/// Factored application of the saddle operator: the output concatenations
/// carry the exact block products with no truncation. Output ranks per block
/// are (2k_lam + 2k_dx, k_mu + k_dx, 2k_lam + k_mu).
TripleBlock apply_saddle(const TimeInvariantSystem& sys, const TripleBlock& v);

/// Time-dependent variant; output ranks grow by a factor of order N and the
/// caller is responsible for truncation.
TripleBlock apply_saddle(const TimeVaryingSystem& sys, const TripleBlock& v);

/// Dense assembly of the symmetric indefinite saddle matrix, ordered
/// time-major within each of the three fields. Desk-scale only.
Matrix assemble_dense(const TimeInvariantSystem& sys);
Matrix assemble_dense(const TimeVaryingSystem& sys);

inline constexpr Index kAssembleGuard = 5000;

/// Dense block-diagonal / constraint pieces of the saddle matrix; shared by
/// the dense assembly, the preconditioner oracles and the spectrum report.
Matrix dense_cov_block(const TimeInvariantSystem& sys);   // blkdiag(B, Q, .., Q)
Matrix dense_cov_block(const TimeVaryingSystem& sys);
Matrix dense_obs_cov(const TimeInvariantSystem& sys);     // blkdiag(R, .., R)
Matrix dense_obs_cov(const TimeVaryingSystem& sys);
Matrix dense_obs_op(const TimeInvariantSystem& sys);      // blkdiag(H, .., H)
Matrix dense_obs_op(const TimeVaryingSystem& sys);
Matrix dense_constraint(const TimeInvariantSystem& sys);  // I with -M on the subdiagonal
Matrix dense_constraint(const TimeVaryingSystem& sys);

/// Kronecker product of two dense matrices (test/oracle helper).
Matrix kron(const Matrix& a, const Matrix& b);

/// Column-major vectorisation.
Vector vectorize(const Matrix& m);
Matrix unvectorize(const Vector& v, Index rows, Index cols);

/// Max abs deviation between (B^T (x) A) vec(C) and vec(A C B).
double kron_vec_identity_gap(const Matrix& b, const Matrix& a, const Matrix& c);

/// Stacks the three dense block values of a TripleBlock into one vector in
/// the assemble_dense ordering.
Vector stack_dense(const TripleBlock& v);

}  // namespace lrda
