#pragma once

#include "lrda/low_rank.hpp"

#include <functional>
#include <optional>
#include <vector>

namespace lrda {

using BlockOperator = std::function<TripleBlock(const TripleBlock&)>;

struct GmresConfig {
  Index max_iter{20};
  double residual_tol{1e-6};
  TruncationPolicy trunc{};
  std::optional<Index> restart{};  // stub: setting it raises an error
  bool track_true_residual{false};  // form the iterate each step and record |b - A x_k|
};

struct SolveReport {
  Index iterations{0};
  std::vector<double> residual_history;  // rotated residual |xi_{k+1}| per iteration
  std::vector<double> true_residual_history;  // filled when tracking is enabled
  double initial_residual{0.0};
  bool converged{false};
  bool breakdown{false};
  Index rank_lam{0};
  Index rank_mu{0};
  Index rank_dx{0};
  double wall_seconds{0.0};
};

/// Internal solver state, exposed for inspection by tests and diagnostics.
struct GmresState {
  Matrix hessenberg;                 // (k+1) x k after k steps
  std::vector<double> givens_c;
  std::vector<double> givens_s;
  Vector xi;                         // rotated right-hand side
  std::vector<TripleBlock> basis;
  std::vector<std::array<Index, 3>> basis_ranks;
};

/// Right-preconditioned GMRES over factored saddle vectors.
///
/// Arnoldi runs modified Gram-Schmidt in the trace-product inner product,
/// with subtraction realised as concatenation of negatively scaled left
/// factors. Basis vectors are truncated under cfg.trunc after the operator
/// application, after the preconditioner application and once more after the
/// Gram-Schmidt chain. The least-squares problem is carried by Givens
/// rotations; convergence tests the rotated residual against
/// residual_tol * |xi_1| and is then confirmed against the true residual of
/// the formed iterate (under truncation the rotated estimate undershoots;
/// an unconfirmed test continues iterating). The final combination is
/// preconditioned once and added onto x0.
std::pair<TripleBlock, SolveReport> solve_lr_gmres(const BlockOperator& apply_op,
                                                   const BlockOperator& apply_precond,
                                                   const TripleBlock& rhs,
                                                   const TripleBlock& x0,
                                                   const GmresConfig& cfg,
                                                   GmresState* state = nullptr);

/// sqrt(<r, r>) with r = rhs - A x, formed by concatenation and scaling.
double residual_true(const BlockOperator& apply_op, const TripleBlock& rhs,
                     const TripleBlock& x);

inline BlockOperator identity_operator() {
  return [](const TripleBlock& v) { return v; };
}

}  // namespace lrda
