#pragma once

#include "lrda/low_rank.hpp"
#include "lrda/saddle.hpp"

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include <complex>
#include <vector>

namespace lrda {

enum class PrecondKind {
  Identity,
  InexactConstraintI,        // constraint blocks approximated by the identity
  InexactConstraintLhat,     // constraint approximated by I + C (x) I, Neumann-truncated inverse
  InexactConstraintIH,       // identity constraint block, exact observation coupling
  SchurDiagLhat,             // block diagonal, Neumann-truncated Schur apply
  SchurDiagSylvester,        // block diagonal, Schur apply through two Sylvester solves
  BlockTriangular,           // block upper triangular with Sylvester Schur apply
  ExactConstraintL,          // diagnostic: exact constraint block, no observation coupling
  ExactSchurDiag,            // diagnostic: block diagonal with the exact Schur complement
};

/// Approximation of the model block used inside constraint solves.
enum class ModelApprox { Zero, Identity, Model };

struct PreconditionerSpec {
  PrecondKind kind{PrecondKind::Identity};
  bool neumann_exact{false};                  // sum the full nilpotent Neumann series
  ModelApprox mtilde{ModelApprox::Identity};  // Sylvester-based Schur solves
  bool htilde_exact{true};                    // BlockTriangular observation coupling
  TruncationPolicy recompress{};              // compression of densely computed blocks

  static PreconditionerSpec identity() { return {PrecondKind::Identity}; }
  static PreconditionerSpec inexact_constraint_i() {
    return {PrecondKind::InexactConstraintI};
  }
  static PreconditionerSpec inexact_constraint_lhat(bool exact_sum = false) {
    return {PrecondKind::InexactConstraintLhat, exact_sum};
  }
  static PreconditionerSpec inexact_constraint_ih() {
    return {PrecondKind::InexactConstraintIH};
  }
  static PreconditionerSpec schur_diag_lhat(bool exact_sum = false) {
    return {PrecondKind::SchurDiagLhat, exact_sum};
  }
  static PreconditionerSpec schur_diag_sylvester(ModelApprox m = ModelApprox::Identity) {
    return {PrecondKind::SchurDiagSylvester, false, m};
  }
  static PreconditionerSpec block_triangular(ModelApprox m = ModelApprox::Model,
                                             bool htilde_exact = true) {
    return {PrecondKind::BlockTriangular, false, m, htilde_exact};
  }
  static PreconditionerSpec exact_constraint_l() { return {PrecondKind::ExactConstraintL}; }
  static PreconditionerSpec exact_schur_diag() { return {PrecondKind::ExactSchurDiag}; }
};

/// A constructed preconditioner: Cholesky factors of the covariance blocks
/// (and the observation-space inverses for the IH variant) are cached once;
/// apply() is pure and thread-safe afterwards.
class Preconditioner {
 public:
  Preconditioner(PreconditionerSpec spec, const TimeInvariantSystem& sys);

  /// Factored application of the variant's inverse.
  TripleBlock apply(const TripleBlock& v) const;

  /// Dense assembly of the applied inverse matrix (oracle / spectrum path,
  /// independent of the factored apply).
  Matrix dense_inverse() const;

  /// Dense assembly of the variant's forward matrix; dense_forward() *
  /// dense_inverse() = I and dense_forward() * vec(apply(v)) = vec(v).
  Matrix dense_forward() const;

  const PreconditionerSpec& spec() const { return spec_; }

 private:
  Matrix mtilde_matrix() const;
  Matrix schur_solve_dense(const Matrix& x) const;  // applies the approximated S^-1
  Matrix apply_cov_inverse_cols(const Matrix& m) const;   // B^-1 col 0, Q^-1 cols 1..N
  Matrix apply_cov_cols(const Matrix& m) const;           // B col 0, Q cols 1..N

  PreconditionerSpec spec_;
  TimeInvariantSystem sys_;
  Eigen::LLT<Matrix> llt_b_, llt_q_, llt_r_;
  Eigen::LLT<Matrix> llt_fb_, llt_fq_;       // (H B H^T + R), (H Q H^T + R)
  Eigen::PartialPivLU<Matrix> lu_mtilde_;    // M-tilde, when invertibility is needed
  Eigen::LLT<Matrix> llt_neg_schur_;         // -(exact Schur complement)
};

/// One-shot convenience wrapper; builds the cached factors and applies once.
TripleBlock apply_preconditioner(const PreconditionerSpec& spec,
                                 const TimeInvariantSystem& sys, const TripleBlock& v);

/// Identity passes through; every other variant rejects time-varying systems.
TripleBlock apply_preconditioner(const PreconditionerSpec& spec,
                                 const TimeVaryingSystem& sys, const TripleBlock& v);

struct SpectrumReport {
  std::vector<std::complex<double>> eigenvalues;
  Index count_at_one{0};        // eigenvalues within 1e-10 of 1
  double max_dev_from_one{0};   // max |tau - 1|
  double bound{0};              // ||[L^T,H^T] - [Lt^T,Ht^T]|| / sigma_min([Lt^T,Ht^T])
  double max_re_dev{0};         // max |Re(tau) - 1|
  double max_im{0};             // max |Im(tau)|
  double im_bound{0};           // sqrt(lmax(H L^-1 D L^-T H^T) / lmin(R)), exact-L case
};

/// Eigenvalues of P^-1 A for the preconditioned saddle system, with the
/// perturbation bound of the constraint-preconditioner eigenvalue analysis.
/// Desk-scale only (saddle dimension <= 1000).
SpectrumReport spectrum_report(const PreconditionerSpec& spec,
                               const TimeInvariantSystem& sys);

inline constexpr Index kSpectrumGuard = 1000;

}  // namespace lrda
