#include "lrda/saddle.hpp"

#include <Eigen/Cholesky>

#include <stdexcept>
#include <string>

namespace lrda {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw std::invalid_argument(msg); }

void check_spd(const Matrix& m, Index dim, const std::string& name) {
  if (m.rows() != dim || m.cols() != dim)
    fail(name + " must be " + std::to_string(dim) + "x" + std::to_string(dim) + ", got " +
         std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
  if (!m.isApprox(m.transpose(), 1e-12)) fail(name + " is not symmetric");
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success) fail(name + " is not positive definite");
}

void check_shape(const Matrix& m, Index rows, Index cols, const std::string& name) {
  if (m.rows() != rows || m.cols() != cols)
    fail(name + " must be " + std::to_string(rows) + "x" + std::to_string(cols) +
         ", got " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
}

void check_block_dims(const TripleBlock& v, Index n, Index steps, Index p,
                      const std::string& where) {
  if (v.state_dim() != n || v.obs_dim() != p || v.time_dim() != steps + 1)
    fail(where + ": block dimensioned " + std::to_string(v.state_dim()) + "/" +
         std::to_string(v.obs_dim()) + "/" + std::to_string(v.time_dim()) +
         " does not match system n=" + std::to_string(n) + ", p=" + std::to_string(p) +
         ", N+1=" + std::to_string(steps + 1));
}

Matrix hcat(std::initializer_list<Matrix> blocks) {
  Index rows = blocks.begin()->rows();
  Index cols = 0;
  for (const auto& b : blocks) cols += b.cols();
  Matrix out(rows, cols);
  Index at = 0;
  for (const auto& b : blocks) {
    out.middleCols(at, b.cols()) = b;
    at += b.cols();
  }
  return out;
}

}  // namespace

TimeInvariantSystem::TimeInvariantSystem(Index n_, Index steps_, Index p_, Matrix B_,
                                         Matrix Q_, Matrix R_, Matrix M_, Matrix H_)
    : n(n_), steps(steps_), p(p_), B(std::move(B_)), Q(std::move(Q_)), R(std::move(R_)),
      M(std::move(M_)), H(std::move(H_)) {
  if (n < 1 || steps < 1 || p < 1) fail("TimeInvariantSystem: n, N, p must be positive");
  check_spd(B, n, "B");
  check_spd(Q, n, "Q");
  check_spd(R, p, "R");
  check_shape(M, n, n, "M");
  check_shape(H, p, n, "H");
}

TimeVaryingSystem::TimeVaryingSystem(Index n_, Index steps_, Index p_, Matrix B_,
                                     std::vector<Matrix> Q_, std::vector<Matrix> R_,
                                     std::vector<Matrix> M_, std::vector<Matrix> H_)
    : n(n_), steps(steps_), p(p_), B(std::move(B_)), Q(std::move(Q_)), R(std::move(R_)),
      M(std::move(M_)), H(std::move(H_)) {
  if (n < 1 || steps < 1 || p < 1) fail("TimeVaryingSystem: n, N, p must be positive");
  check_spd(B, n, "B");
  if (static_cast<Index>(Q.size()) != steps)
    fail("TimeVaryingSystem: expected N=" + std::to_string(steps) + " Q blocks, got " +
         std::to_string(Q.size()));
  if (static_cast<Index>(R.size()) != steps + 1)
    fail("TimeVaryingSystem: expected N+1 R blocks, got " + std::to_string(R.size()));
  if (static_cast<Index>(M.size()) != steps)
    fail("TimeVaryingSystem: expected N model blocks, got " + std::to_string(M.size()));
  if (static_cast<Index>(H.size()) != steps + 1)
    fail("TimeVaryingSystem: expected N+1 observation blocks, got " +
         std::to_string(H.size()));
  for (Index i = 0; i < steps; ++i) check_spd(Q[i], n, "Q_" + std::to_string(i + 1));
  for (Index i = 0; i <= steps; ++i) check_spd(R[i], p, "R_" + std::to_string(i));
  for (Index i = 0; i < steps; ++i) check_shape(M[i], n, n, "M_" + std::to_string(i + 1));
  for (Index i = 0; i <= steps; ++i) check_shape(H[i], p, n, "H_" + std::to_string(i));
}

Matrix keep_first_row(const Matrix& v) {
  Matrix out = Matrix::Zero(v.rows(), v.cols());
  out.row(0) = v.row(0);
  return out;
}

Matrix drop_first_row(const Matrix& v) {
  Matrix out = v;
  out.row(0).setZero();
  return out;
}

Matrix keep_row(const Matrix& v, Index i) {
  Matrix out = Matrix::Zero(v.rows(), v.cols());
  out.row(i) = v.row(i);
  return out;
}

Matrix shift_rows_down_negated(const Matrix& v) {
  Matrix out = Matrix::Zero(v.rows(), v.cols());
  if (v.rows() > 1) out.bottomRows(v.rows() - 1) = -v.topRows(v.rows() - 1);
  return out;
}

Matrix shift_rows_up_negated(const Matrix& v) {
  Matrix out = Matrix::Zero(v.rows(), v.cols());
  if (v.rows() > 1) out.topRows(v.rows() - 1) = -v.bottomRows(v.rows() - 1);
  return out;
}

Matrix sub_shift_negated(const Matrix& v, Index i) {
  Matrix out = Matrix::Zero(v.rows(), v.cols());
  out.row(i) = -v.row(i - 1);
  return out;
}

Matrix sub_shift_negated_t(const Matrix& v, Index i) {
  Matrix out = Matrix::Zero(v.rows(), v.cols());
  out.row(i - 1) = -v.row(i);
  return out;
}

TripleBlock apply_saddle(const TimeInvariantSystem& sys, const TripleBlock& v) {
  check_block_dims(v, sys.n, sys.steps, sys.p, "apply_saddle");
  const Matrix& wl = v.lam.left();
  const Matrix& vl = v.lam.right();
  const Matrix& wm = v.mu.left();
  const Matrix& vm = v.mu.right();
  const Matrix& wx = v.dx.left();
  const Matrix& vx = v.dx.right();

  // First block row: B*Lam*E1 + Q*Lam*E2 + X + M*X*C^T.
  LowRankFactor lam_out(hcat({sys.B * wl, sys.Q * wl, wx, sys.M * wx}),
                        hcat({keep_first_row(vl), drop_first_row(vl), vx,
                              shift_rows_down_negated(vx)}));
  // Second block row: R*U + H*X.
  LowRankFactor mu_out(hcat({sys.R * wm, sys.H * wx}), hcat({vm, vx}));
  // Third block row: Lam + M^T*Lam*C + H^T*U.
  LowRankFactor dx_out(hcat({wl, sys.M.transpose() * wl, sys.H.transpose() * wm}),
                       hcat({vl, shift_rows_up_negated(vl), vm}));
  return TripleBlock(std::move(lam_out), std::move(mu_out), std::move(dx_out));
}

TripleBlock apply_saddle(const TimeVaryingSystem& sys, const TripleBlock& v) {
  check_block_dims(v, sys.n, sys.steps, sys.p, "apply_saddle");
  const Index N = sys.steps;
  const Matrix& wl = v.lam.left();
  const Matrix& vl = v.lam.right();
  const Matrix& wm = v.mu.left();
  const Matrix& vm = v.mu.right();
  const Matrix& wx = v.dx.left();
  const Matrix& vx = v.dx.right();
  const Index kl = wl.cols();
  const Index km = wm.cols();
  const Index kx = wx.cols();

  // B*Lam*F1 + sum_i Q_i*Lam*F_{i+1} + X + sum_i M_i*X*C_i^T
  Matrix lam_left(sys.n, (N + 1) * kl + (N + 1) * kx);
  Matrix lam_right(N + 1, lam_left.cols());
  Index at = 0;
  lam_left.middleCols(at, kl) = sys.B * wl;
  lam_right.middleCols(at, kl) = keep_row(vl, 0);
  at += kl;
  for (Index i = 1; i <= N; ++i, at += kl) {
    lam_left.middleCols(at, kl) = sys.Q[i - 1] * wl;
    lam_right.middleCols(at, kl) = keep_row(vl, i);
  }
  lam_left.middleCols(at, kx) = wx;
  lam_right.middleCols(at, kx) = vx;
  at += kx;
  for (Index i = 1; i <= N; ++i, at += kx) {
    lam_left.middleCols(at, kx) = sys.M[i - 1] * wx;
    lam_right.middleCols(at, kx) = sub_shift_negated(vx, i);
  }

  // sum_i R_i*U*F_{i+1} + sum_i H_i*X*F_{i+1}
  Matrix mu_left(sys.p, (N + 1) * km + (N + 1) * kx);
  Matrix mu_right(N + 1, mu_left.cols());
  at = 0;
  for (Index i = 0; i <= N; ++i, at += km) {
    mu_left.middleCols(at, km) = sys.R[i] * wm;
    mu_right.middleCols(at, km) = keep_row(vm, i);
  }
  for (Index i = 0; i <= N; ++i, at += kx) {
    mu_left.middleCols(at, kx) = sys.H[i] * wx;
    mu_right.middleCols(at, kx) = keep_row(vx, i);
  }

  // Lam + sum_i M_i^T*Lam*C_i + sum_i H_i^T*U*F_{i+1}
  Matrix dx_left(sys.n, kl + N * kl + (N + 1) * km);
  Matrix dx_right(N + 1, dx_left.cols());
  at = 0;
  dx_left.middleCols(at, kl) = wl;
  dx_right.middleCols(at, kl) = vl;
  at += kl;
  for (Index i = 1; i <= N; ++i, at += kl) {
    dx_left.middleCols(at, kl) = sys.M[i - 1].transpose() * wl;
    dx_right.middleCols(at, kl) = sub_shift_negated_t(vl, i);
  }
  for (Index i = 0; i <= N; ++i, at += km) {
    dx_left.middleCols(at, km) = sys.H[i].transpose() * wm;
    dx_right.middleCols(at, km) = keep_row(vm, i);
  }

  return TripleBlock(LowRankFactor(std::move(lam_left), std::move(lam_right)),
                     LowRankFactor(std::move(mu_left), std::move(mu_right)),
                     LowRankFactor(std::move(dx_left), std::move(dx_right)));
}

namespace {

template <typename System>
Matrix assemble_dense_impl(const System& sys) {
  if (sys.saddle_dim() > kAssembleGuard)
    fail("assemble_dense: saddle dimension " + std::to_string(sys.saddle_dim()) +
         " exceeds the desk-scale guard of " + std::to_string(kAssembleGuard));
  const Index nl = sys.n * (sys.steps + 1);
  const Index nm = sys.p * (sys.steps + 1);
  Matrix D = dense_cov_block(sys);
  Matrix R = dense_obs_cov(sys);
  Matrix H = dense_obs_op(sys);
  Matrix L = dense_constraint(sys);

  Matrix A = Matrix::Zero(2 * nl + nm, 2 * nl + nm);
  A.topLeftCorner(nl, nl) = D;
  A.block(nl, nl, nm, nm) = R;
  A.topRightCorner(nl, nl) = L;
  A.block(nl, nl + nm, nm, nl) = H;
  A.bottomLeftCorner(nl, nl) = L.transpose();
  A.block(nl + nm, nl, nl, nm) = H.transpose();
  return A;
}

}  // namespace

Matrix assemble_dense(const TimeInvariantSystem& sys) { return assemble_dense_impl(sys); }
Matrix assemble_dense(const TimeVaryingSystem& sys) { return assemble_dense_impl(sys); }

Matrix dense_cov_block(const TimeInvariantSystem& sys) {
  const Index nl = sys.n * (sys.steps + 1);
  Matrix D = Matrix::Zero(nl, nl);
  D.topLeftCorner(sys.n, sys.n) = sys.B;
  for (Index i = 1; i <= sys.steps; ++i)
    D.block(i * sys.n, i * sys.n, sys.n, sys.n) = sys.Q;
  return D;
}

Matrix dense_cov_block(const TimeVaryingSystem& sys) {
  const Index nl = sys.n * (sys.steps + 1);
  Matrix D = Matrix::Zero(nl, nl);
  D.topLeftCorner(sys.n, sys.n) = sys.B;
  for (Index i = 1; i <= sys.steps; ++i)
    D.block(i * sys.n, i * sys.n, sys.n, sys.n) = sys.Q[i - 1];
  return D;
}

Matrix dense_obs_cov(const TimeInvariantSystem& sys) {
  const Index nm = sys.p * (sys.steps + 1);
  Matrix R = Matrix::Zero(nm, nm);
  for (Index i = 0; i <= sys.steps; ++i)
    R.block(i * sys.p, i * sys.p, sys.p, sys.p) = sys.R;
  return R;
}

Matrix dense_obs_cov(const TimeVaryingSystem& sys) {
  const Index nm = sys.p * (sys.steps + 1);
  Matrix R = Matrix::Zero(nm, nm);
  for (Index i = 0; i <= sys.steps; ++i)
    R.block(i * sys.p, i * sys.p, sys.p, sys.p) = sys.R[i];
  return R;
}

Matrix dense_obs_op(const TimeInvariantSystem& sys) {
  Matrix H = Matrix::Zero(sys.p * (sys.steps + 1), sys.n * (sys.steps + 1));
  for (Index i = 0; i <= sys.steps; ++i)
    H.block(i * sys.p, i * sys.n, sys.p, sys.n) = sys.H;
  return H;
}

Matrix dense_obs_op(const TimeVaryingSystem& sys) {
  Matrix H = Matrix::Zero(sys.p * (sys.steps + 1), sys.n * (sys.steps + 1));
  for (Index i = 0; i <= sys.steps; ++i)
    H.block(i * sys.p, i * sys.n, sys.p, sys.n) = sys.H[i];
  return H;
}

Matrix dense_constraint(const TimeInvariantSystem& sys) {
  const Index nl = sys.n * (sys.steps + 1);
  Matrix L = Matrix::Identity(nl, nl);
  for (Index i = 1; i <= sys.steps; ++i)
    L.block(i * sys.n, (i - 1) * sys.n, sys.n, sys.n) = -sys.M;
  return L;
}

Matrix dense_constraint(const TimeVaryingSystem& sys) {
  const Index nl = sys.n * (sys.steps + 1);
  Matrix L = Matrix::Identity(nl, nl);
  for (Index i = 1; i <= sys.steps; ++i)
    L.block(i * sys.n, (i - 1) * sys.n, sys.n, sys.n) = -sys.M[i - 1];
  return L;
}

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

Vector vectorize(const Matrix& m) {
  return Eigen::Map<const Vector>(m.data(), m.size());
}

Matrix unvectorize(const Vector& v, Index rows, Index cols) {
  if (v.size() != rows * cols) fail("unvectorize: size mismatch");
  return Eigen::Map<const Matrix>(v.data(), rows, cols);
}

double kron_vec_identity_gap(const Matrix& b, const Matrix& a, const Matrix& c) {
  Vector lhs = kron(b.transpose(), a) * vectorize(c);
  Vector rhs = vectorize(a * c * b);
  if (lhs.size() == 0) return 0.0;
  return (lhs - rhs).cwiseAbs().maxCoeff();
}

Vector stack_dense(const TripleBlock& v) {
  Vector lam = vectorize(to_dense(v.lam));
  Vector mu = vectorize(to_dense(v.mu));
  Vector dx = vectorize(to_dense(v.dx));
  Vector out(lam.size() + mu.size() + dx.size());
  out << lam, mu, dx;
  return out;
}

}  // namespace lrda
