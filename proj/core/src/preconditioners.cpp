#include "lrda/preconditioners.hpp"

#include "lrda/sylvester.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <cmath>
#include <limits>
#include <stdexcept>

namespace lrda {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

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

// Subdiagonal shift matrix of the time grid, -1 below the diagonal.
Matrix c_matrix(Index steps) {
  Matrix c = Matrix::Zero(steps + 1, steps + 1);
  for (Index i = 1; i <= steps; ++i) c(i, i - 1) = -1.0;
  return c;
}

// Truncated (or fully summed) Neumann inverse of I + C (x) I, at the time-block
// level: +I_n on the first k subdiagonal block rows.
Matrix k_matrix(Index n, Index steps, bool exact) {
  const Index terms = exact ? steps : 1;
  Matrix k = Matrix::Identity(n * (steps + 1), n * (steps + 1));
  for (Index shift = 1; shift <= terms; ++shift)
    for (Index i = shift; i <= steps; ++i)
      k.block(i * n, (i - shift) * n, n, n) = Matrix::Identity(n, n);
  return k;
}

// Closed-form inverse of k_matrix: alternating-sign shifts for the two-term
// mode, I + C (x) I for the exact mode.
Matrix k_matrix_inverse(Index n, Index steps, bool exact) {
  Matrix k = Matrix::Identity(n * (steps + 1), n * (steps + 1));
  if (exact) {
    for (Index i = 1; i <= steps; ++i)
      k.block(i * n, (i - 1) * n, n, n) = -Matrix::Identity(n, n);
  } else {
    for (Index shift = 1; shift <= steps; ++shift) {
      const double sign = (shift % 2 == 0) ? 1.0 : -1.0;
      for (Index i = shift; i <= steps; ++i)
        k.block(i * n, (i - shift) * n, n, n) = sign * Matrix::Identity(n, n);
    }
  }
  return k;
}

// Factored application of the Neumann-truncated constraint inverse to a
// single low-rank factor. transpose selects K^T.
LowRankFactor apply_neumann(const LowRankFactor& f, bool transpose, bool exact,
                            Index steps) {
  auto shift = [&](const Matrix& v) {
    return transpose ? shift_rows_up_negated(v) : shift_rows_down_negated(v);
  };
  if (!exact) {
    Matrix left = hcat({f.left(), -f.left()});
    Matrix right = hcat({f.right(), shift(f.right())});
    return LowRankFactor(std::move(left), std::move(right));
  }
  const Index k = f.rank();
  Matrix left(f.rows_left(), (steps + 1) * k);
  Matrix right(f.rows_right(), (steps + 1) * k);
  Matrix shifted = f.right();
  double sign = 1.0;
  for (Index term = 0; term <= steps; ++term) {
    left.middleCols(term * k, k) = sign * f.left();
    right.middleCols(term * k, k) = shifted;
    shifted = shift(shifted);
    sign = -sign;
  }
  return LowRankFactor(std::move(left), std::move(right));
}

}  // namespace

Preconditioner::Preconditioner(PreconditionerSpec spec, const TimeInvariantSystem& sys)
    : spec_(spec), sys_(sys) {
  spec_.recompress.validate();
  llt_b_.compute(sys_.B);
  llt_q_.compute(sys_.Q);
  llt_r_.compute(sys_.R);
  if (spec_.kind == PrecondKind::InexactConstraintIH) {
    llt_fb_.compute(sys_.H * sys_.B * sys_.H.transpose() + sys_.R);
    llt_fq_.compute(sys_.H * sys_.Q * sys_.H.transpose() + sys_.R);
    if (llt_fb_.info() != Eigen::Success || llt_fq_.info() != Eigen::Success)
      throw std::runtime_error("Preconditioner: H D H^T + R is not positive definite");
  }
  if ((spec_.kind == PrecondKind::SchurDiagSylvester ||
       spec_.kind == PrecondKind::BlockTriangular) &&
      spec_.mtilde != ModelApprox::Zero) {
    lu_mtilde_.compute(mtilde_matrix());
    if (std::abs(lu_mtilde_.determinant()) < 1e-300)
      throw std::runtime_error(
          "Preconditioner: model approximation is singular, Sylvester solve unavailable");
  }
  if (spec_.kind == PrecondKind::ExactSchurDiag) {
    Matrix l = dense_constraint(sys_);
    Matrix dinv = dense_cov_block(sys_).inverse();
    Matrix h = dense_obs_op(sys_);
    Matrix rinv = dense_obs_cov(sys_).inverse();
    llt_neg_schur_.compute(l.transpose() * dinv * l + h.transpose() * rinv * h);
    if (llt_neg_schur_.info() != Eigen::Success)
      throw std::runtime_error("Preconditioner: exact Schur complement not definite");
  }
}

Matrix Preconditioner::mtilde_matrix() const {
  switch (spec_.mtilde) {
    case ModelApprox::Zero: return Matrix::Zero(sys_.n, sys_.n);
    case ModelApprox::Identity: return Matrix::Identity(sys_.n, sys_.n);
    case ModelApprox::Model: return sys_.M;
  }
  throw std::logic_error("unreachable");
}

Matrix Preconditioner::apply_cov_inverse_cols(const Matrix& m) const {
  Matrix out(m.rows(), m.cols());
  out.col(0) = llt_b_.solve(m.col(0));
  if (m.cols() > 1) out.rightCols(m.cols() - 1) = llt_q_.solve(m.rightCols(m.cols() - 1));
  return out;
}

Matrix Preconditioner::apply_cov_cols(const Matrix& m) const {
  Matrix out(m.rows(), m.cols());
  out.col(0) = sys_.B * m.col(0);
  if (m.cols() > 1) out.rightCols(m.cols() - 1) = sys_.Q * m.rightCols(m.cols() - 1);
  return out;
}

// Applies the inverse of the approximated Schur complement
// -L~^T D^-1 L~ with L~ = I + C (x) M~, through one backward and one forward
// constraint solve carried out as dense Sylvester equations.
Matrix Preconditioner::schur_solve_dense(const Matrix& x) const {
  if (spec_.mtilde == ModelApprox::Zero) return -apply_cov_cols(x);

  const Index steps = sys_.steps;
  Matrix mt = mtilde_matrix();
  Matrix mt_inv = lu_mtilde_.inverse();

  // L~^T u = -x  as  M~^-T U + U C = -M~^-T X
  Matrix u = solve_sylvester(mt_inv.transpose(), c_matrix(steps),
                             -mt_inv.transpose() * x);
  Matrix g = apply_cov_cols(u);
  // L~ z = g  as  M~^-1 Z + Z C^T = M~^-1 G
  return solve_sylvester(mt_inv, c_matrix(steps).transpose(), mt_inv * g);
}

TripleBlock Preconditioner::apply(const TripleBlock& v) const {
  if (v.state_dim() != sys_.n || v.obs_dim() != sys_.p || v.time_dim() != sys_.steps + 1)
    throw std::invalid_argument("Preconditioner::apply: block does not match the system");

  const Matrix& wl = v.lam.left();
  const Matrix& vl = v.lam.right();
  const Matrix& wm = v.mu.left();
  const Matrix& vm = v.mu.right();
  const Matrix& wx = v.dx.left();
  const Matrix& vx = v.dx.right();
  const bool exact = spec_.neumann_exact;
  const Index steps = sys_.steps;

  // Factored D^-1 and R^-1 applications shared by several variants.
  auto cov_inv_factor = [&](const LowRankFactor& f) {
    return LowRankFactor(hcat({llt_b_.solve(f.left()), llt_q_.solve(f.left())}),
                         hcat({keep_first_row(f.right()), drop_first_row(f.right())}));
  };
  auto obs_cov_inv_factor = [&](const LowRankFactor& f) {
    return LowRankFactor(llt_r_.solve(f.left()), f.right());
  };
  // J = -K D~ K^T with D~ the blockwise covariance inverse.
  auto j_factor = [&](const LowRankFactor& f) {
    LowRankFactor t = apply_neumann(f, true, exact, steps);
    LowRankFactor mid = cov_inv_factor(t);
    return scale(apply_neumann(mid, false, exact, steps), -1.0);
  };

  switch (spec_.kind) {
    case PrecondKind::Identity:
      return v;

    case PrecondKind::InexactConstraintI: {
      LowRankFactor lam_out = v.dx;
      LowRankFactor mu_out = obs_cov_inv_factor(v.mu);
      LowRankFactor dx_out(
          hcat({wl, -llt_b_.solve(wx), -llt_q_.solve(wx)}),
          hcat({vl, keep_first_row(vx), drop_first_row(vx)}));
      return TripleBlock(std::move(lam_out), std::move(mu_out), std::move(dx_out));
    }

    case PrecondKind::InexactConstraintLhat: {
      LowRankFactor lam_out = apply_neumann(v.dx, true, exact, steps);
      LowRankFactor mu_out = obs_cov_inv_factor(v.mu);
      LowRankFactor dx_out =
          concat(apply_neumann(v.lam, false, exact, steps), j_factor(v.dx));
      return TripleBlock(std::move(lam_out), std::move(mu_out), std::move(dx_out));
    }

    case PrecondKind::InexactConstraintIH: {
      auto fb = [&](const Matrix& m) { return llt_fb_.solve(m); };
      auto fq = [&](const Matrix& m) { return llt_fq_.solve(m); };
      const Matrix& H = sys_.H;
      Matrix hwl = H * wl;
      Matrix hbwx = H * (sys_.B * wx);
      Matrix hqwx = H * (sys_.Q * wx);

      LowRankFactor lam_out(
          hcat({H.transpose() * fb(hwl), H.transpose() * fq(hwl),
                -H.transpose() * fb(wm), -H.transpose() * fq(wm), wx,
                -H.transpose() * fb(hbwx), -H.transpose() * fq(hqwx)}),
          hcat({keep_first_row(vl), drop_first_row(vl), keep_first_row(vm),
                drop_first_row(vm), vx, keep_first_row(vx), drop_first_row(vx)}));
      LowRankFactor mu_out(
          hcat({-fb(hwl), -fq(hwl), fb(wm), fq(wm), fb(hbwx), fq(hqwx)}),
          hcat({keep_first_row(vl), drop_first_row(vl), keep_first_row(vm),
                drop_first_row(vm), keep_first_row(vx), drop_first_row(vx)}));
      LowRankFactor dx_out(
          hcat({wl, -sys_.B * (H.transpose() * fb(hwl)),
                -sys_.Q * (H.transpose() * fq(hwl)), sys_.B * (H.transpose() * fb(wm)),
                sys_.Q * (H.transpose() * fq(wm)),
                sys_.B * (H.transpose() * fb(hbwx)) - sys_.B * wx,
                sys_.Q * (H.transpose() * fq(hqwx)) - sys_.Q * wx}),
          hcat({vl, keep_first_row(vl), drop_first_row(vl), keep_first_row(vm),
                drop_first_row(vm), keep_first_row(vx), drop_first_row(vx)}));
      return TripleBlock(std::move(lam_out), std::move(mu_out), std::move(dx_out));
    }

    case PrecondKind::SchurDiagLhat: {
      LowRankFactor lam_out = cov_inv_factor(v.lam);
      LowRankFactor mu_out = obs_cov_inv_factor(v.mu);
      LowRankFactor dx_out = j_factor(v.dx);
      return TripleBlock(std::move(lam_out), std::move(mu_out), std::move(dx_out));
    }

    case PrecondKind::SchurDiagSylvester: {
      LowRankFactor lam_out = cov_inv_factor(v.lam);
      LowRankFactor mu_out = obs_cov_inv_factor(v.mu);
      Matrix z = schur_solve_dense(to_dense(v.dx));
      LowRankFactor dx_out = from_dense(z, spec_.recompress);
      return TripleBlock(std::move(lam_out), std::move(mu_out), std::move(dx_out));
    }

    case PrecondKind::BlockTriangular: {
      Matrix t = schur_solve_dense(to_dense(v.dx));
      LowRankFactor dx_out = from_dense(t, spec_.recompress);

      // L~ t, with the same model approximation as the Schur solve.
      Matrix mt = mtilde_matrix();
      Matrix lt = t;
      for (Index j = sys_.steps; j >= 1; --j) lt.col(j) -= mt * t.col(j - 1);
      LowRankFactor lam_out =
          concat(cov_inv_factor(v.lam),
                 from_dense(-apply_cov_inverse_cols(lt), spec_.recompress));

      LowRankFactor mu_out = obs_cov_inv_factor(v.mu);
      if (spec_.htilde_exact) {
        Matrix ht = sys_.H * t;
        mu_out = concat(mu_out, from_dense(-llt_r_.solve(ht), spec_.recompress));
      }
      return TripleBlock(std::move(lam_out), std::move(mu_out), std::move(dx_out));
    }

    case PrecondKind::ExactConstraintL: {
      // lam <- L^-T x by backward substitution through the window.
      Matrix x = to_dense(v.dx);
      Matrix u(x.rows(), x.cols());
      u.col(sys_.steps) = x.col(sys_.steps);
      for (Index j = sys_.steps - 1; j >= 0; --j)
        u.col(j) = x.col(j) + sys_.M.transpose() * u.col(j + 1);
      LowRankFactor lam_out = from_dense(u, spec_.recompress);

      LowRankFactor mu_out = obs_cov_inv_factor(v.mu);

      // x <- L^-1 (lam - D u) by forward substitution.
      Matrix g = to_dense(v.lam) - apply_cov_cols(u);
      Matrix z(g.rows(), g.cols());
      z.col(0) = g.col(0);
      for (Index j = 1; j <= sys_.steps; ++j) z.col(j) = g.col(j) + sys_.M * z.col(j - 1);
      LowRankFactor dx_out = from_dense(z, spec_.recompress);
      return TripleBlock(std::move(lam_out), std::move(mu_out), std::move(dx_out));
    }

    case PrecondKind::ExactSchurDiag: {
      LowRankFactor lam_out = cov_inv_factor(v.lam);
      LowRankFactor mu_out = obs_cov_inv_factor(v.mu);
      Matrix x = to_dense(v.dx);
      Vector z = -llt_neg_schur_.solve(vectorize(x));
      LowRankFactor dx_out =
          from_dense(unvectorize(z, x.rows(), x.cols()), spec_.recompress);
      return TripleBlock(std::move(lam_out), std::move(mu_out), std::move(dx_out));
    }
  }
  throw std::logic_error("unreachable");
}

Matrix Preconditioner::dense_inverse() const {
  const Index n = sys_.n;
  const Index p = sys_.p;
  const Index steps = sys_.steps;
  const Index nl = n * (steps + 1);
  const Index nm = p * (steps + 1);
  const Index dim = 2 * nl + nm;

  Matrix dinv = dense_cov_block(sys_).inverse();
  Matrix rinv = dense_obs_cov(sys_).inverse();
  Matrix eye = Matrix::Identity(nl, nl);

  auto block_diag = [&](const Matrix& a, const Matrix& b, const Matrix& c) {
    Matrix out = Matrix::Zero(dim, dim);
    out.topLeftCorner(nl, nl) = a;
    out.block(nl, nl, nm, nm) = b;
    out.bottomRightCorner(nl, nl) = c;
    return out;
  };

  switch (spec_.kind) {
    case PrecondKind::Identity:
      return Matrix::Identity(dim, dim);

    case PrecondKind::InexactConstraintI: {
      Matrix out = block_diag(Matrix::Zero(nl, nl), rinv, -dinv);
      out.topRightCorner(nl, nl) = eye;
      out.bottomLeftCorner(nl, nl) = eye;
      return out;
    }

    case PrecondKind::InexactConstraintLhat: {
      Matrix k = k_matrix(n, steps, spec_.neumann_exact);
      Matrix out = block_diag(Matrix::Zero(nl, nl), rinv, -k * dinv * k.transpose());
      out.topRightCorner(nl, nl) = k.transpose();
      out.bottomLeftCorner(nl, nl) = k;
      return out;
    }

    case PrecondKind::InexactConstraintIH: {
      Matrix d = dense_cov_block(sys_);
      Matrix h = dense_obs_op(sys_);
      Matrix f = Matrix::Zero(nm, nm);
      f.topLeftCorner(p, p) = (sys_.H * sys_.B * sys_.H.transpose() + sys_.R).inverse();
      Matrix fq = (sys_.H * sys_.Q * sys_.H.transpose() + sys_.R).inverse();
      for (Index i = 1; i <= steps; ++i) f.block(i * p, i * p, p, p) = fq;

      Matrix hf = h.transpose() * f;
      Matrix hfh = hf * h;
      Matrix out(dim, dim);
      out.topLeftCorner(nl, nl) = hfh;
      out.block(0, nl, nl, nm) = -hf;
      out.topRightCorner(nl, nl) = eye - hfh * d;
      out.block(nl, 0, nm, nl) = -f * h;
      out.block(nl, nl, nm, nm) = f;
      out.block(nl, nl + nm, nm, nl) = f * h * d;
      out.bottomLeftCorner(nl, nl) = eye - d * hfh;
      out.block(nl + nm, nl, nl, nm) = d * hf;
      out.bottomRightCorner(nl, nl) = d * hfh * d - d;
      return out;
    }

    case PrecondKind::SchurDiagLhat: {
      Matrix k = k_matrix(n, steps, spec_.neumann_exact);
      return block_diag(dinv, rinv, -k * dinv * k.transpose());
    }

    case PrecondKind::SchurDiagSylvester: {
      Matrix lt = eye + kron(c_matrix(steps), mtilde_matrix());
      Matrix schur = -lt.transpose() * dinv * lt;
      return block_diag(dinv, rinv, schur.inverse());
    }

    case PrecondKind::BlockTriangular: {
      Matrix lt = eye + kron(c_matrix(steps), mtilde_matrix());
      Matrix schur_inv = (-lt.transpose() * dinv * lt).inverse();
      Matrix h = dense_obs_op(sys_);
      Matrix out = block_diag(dinv, rinv, schur_inv);
      out.topRightCorner(nl, nl) = -dinv * lt * schur_inv;
      if (spec_.htilde_exact) out.block(nl, nl + nm, nm, nl) = -rinv * h * schur_inv;
      return out;
    }

    case PrecondKind::ExactConstraintL: {
      Matrix l = dense_constraint(sys_);
      Matrix linv = l.inverse();
      Matrix d = dense_cov_block(sys_);
      Matrix out = block_diag(Matrix::Zero(nl, nl), rinv,
                              -linv * d * linv.transpose());
      out.topRightCorner(nl, nl) = linv.transpose();
      out.bottomLeftCorner(nl, nl) = linv;
      return out;
    }

    case PrecondKind::ExactSchurDiag: {
      Matrix l = dense_constraint(sys_);
      Matrix h = dense_obs_op(sys_);
      Matrix schur = -(l.transpose() * dinv * l + h.transpose() * rinv * h);
      return block_diag(dinv, rinv, schur.inverse());
    }
  }
  throw std::logic_error("unreachable");
}

Matrix Preconditioner::dense_forward() const {
  const Index n = sys_.n;
  const Index p = sys_.p;
  const Index steps = sys_.steps;
  const Index nl = n * (steps + 1);
  const Index nm = p * (steps + 1);
  const Index dim = 2 * nl + nm;

  Matrix d = dense_cov_block(sys_);
  Matrix dinv = d.inverse();
  Matrix r = dense_obs_cov(sys_);
  Matrix eye = Matrix::Identity(nl, nl);

  auto constraint_form = [&](const Matrix& block11, const Matrix& coupling) {
    Matrix out = Matrix::Zero(dim, dim);
    out.topLeftCorner(nl, nl) = block11;
    out.block(nl, nl, nm, nm) = r;
    out.topRightCorner(nl, nl) = coupling;
    out.bottomLeftCorner(nl, nl) = coupling.transpose();
    return out;
  };

  switch (spec_.kind) {
    case PrecondKind::Identity:
      return Matrix::Identity(dim, dim);

    // The printed applied inverses of the truncated-constraint variants carry
    // the blockwise covariance inverse where the block factorisation of the
    // forward matrix produces the covariance itself; the forward matrices here
    // mirror the applied algebra so that forward * inverse = I holds exactly.
    case PrecondKind::InexactConstraintI:
      return constraint_form(dinv, eye);

    case PrecondKind::InexactConstraintLhat:
      return constraint_form(dinv, k_matrix_inverse(n, steps, spec_.neumann_exact));

    case PrecondKind::InexactConstraintIH: {
      Matrix out = constraint_form(d, eye);
      Matrix h = dense_obs_op(sys_);
      out.block(nl, nl + nm, nm, nl) = h;
      out.block(nl + nm, nl, nl, nm) = h.transpose();
      return out;
    }

    case PrecondKind::SchurDiagLhat: {
      Matrix kinv = k_matrix_inverse(n, steps, spec_.neumann_exact);
      Matrix out = Matrix::Zero(dim, dim);
      out.topLeftCorner(nl, nl) = d;
      out.block(nl, nl, nm, nm) = r;
      out.bottomRightCorner(nl, nl) = -kinv.transpose() * d * kinv;
      return out;
    }

    case PrecondKind::SchurDiagSylvester: {
      Matrix lt = eye + kron(c_matrix(steps), mtilde_matrix());
      Matrix out = Matrix::Zero(dim, dim);
      out.topLeftCorner(nl, nl) = d;
      out.block(nl, nl, nm, nm) = r;
      out.bottomRightCorner(nl, nl) = -lt.transpose() * dinv * lt;
      return out;
    }

    case PrecondKind::BlockTriangular: {
      Matrix lt = eye + kron(c_matrix(steps), mtilde_matrix());
      Matrix out = Matrix::Zero(dim, dim);
      out.topLeftCorner(nl, nl) = d;
      out.block(nl, nl, nm, nm) = r;
      out.topRightCorner(nl, nl) = lt;
      if (spec_.htilde_exact) out.block(nl, nl + nm, nm, nl) = dense_obs_op(sys_);
      out.bottomRightCorner(nl, nl) = -lt.transpose() * dinv * lt;
      return out;
    }

    case PrecondKind::ExactConstraintL:
      return constraint_form(d, dense_constraint(sys_));

    case PrecondKind::ExactSchurDiag: {
      Matrix l = dense_constraint(sys_);
      Matrix h = dense_obs_op(sys_);
      Matrix rinv = r.inverse();
      Matrix out = Matrix::Zero(dim, dim);
      out.topLeftCorner(nl, nl) = d;
      out.block(nl, nl, nm, nm) = r;
      out.bottomRightCorner(nl, nl) =
          -(l.transpose() * dinv * l + h.transpose() * rinv * h);
      return out;
    }
  }
  throw std::logic_error("unreachable");
}

TripleBlock apply_preconditioner(const PreconditionerSpec& spec,
                                 const TimeInvariantSystem& sys, const TripleBlock& v) {
  return Preconditioner(spec, sys).apply(v);
}

TripleBlock apply_preconditioner(const PreconditionerSpec& spec,
                                 const TimeVaryingSystem&, const TripleBlock& v) {
  if (spec.kind == PrecondKind::Identity) return v;
  throw std::invalid_argument(
      "apply_preconditioner: this preconditioner requires a time-invariant system");
}

SpectrumReport spectrum_report(const PreconditionerSpec& spec,
                               const TimeInvariantSystem& sys) {
  if (sys.saddle_dim() > kSpectrumGuard)
    throw std::invalid_argument("spectrum_report: saddle dimension " +
                                std::to_string(sys.saddle_dim()) +
                                " exceeds the guard of " + std::to_string(kSpectrumGuard));
  Preconditioner prec(spec, sys);
  Matrix a = assemble_dense(sys);
  Matrix pinv = prec.dense_inverse();
  Eigen::EigenSolver<Matrix> eig(pinv * a);
  if (eig.info() != Eigen::Success)
    throw std::runtime_error("spectrum_report: eigensolver failed");

  SpectrumReport report;
  report.bound = kInf;
  report.im_bound = kInf;
  for (Index i = 0; i < eig.eigenvalues().size(); ++i) {
    std::complex<double> tau = eig.eigenvalues()(i);
    report.eigenvalues.push_back(tau);
    const double dev = std::abs(tau - 1.0);
    report.max_dev_from_one = std::max(report.max_dev_from_one, dev);
    if (dev <= 1e-10) ++report.count_at_one;
    report.max_re_dev = std::max(report.max_re_dev, std::abs(tau.real() - 1.0));
    report.max_im = std::max(report.max_im, std::abs(tau.imag()));
  }

  const Index nl = sys.n * (sys.steps + 1);
  const Index nm = sys.p * (sys.steps + 1);
  Matrix l = dense_constraint(sys);
  Matrix h = dense_obs_op(sys);

  // Nominal constraint approximations of the variant, where one exists.
  Matrix lt, ht;
  bool constraint_form = true;
  switch (spec.kind) {
    case PrecondKind::InexactConstraintI:
      lt = Matrix::Identity(nl, nl);
      ht = Matrix::Zero(nm, nl);
      break;
    case PrecondKind::InexactConstraintLhat:
      lt = k_matrix_inverse(sys.n, sys.steps, true);  // I + C (x) I
      ht = Matrix::Zero(nm, nl);
      break;
    case PrecondKind::InexactConstraintIH:
      lt = Matrix::Identity(nl, nl);
      ht = h;
      break;
    case PrecondKind::ExactConstraintL:
      lt = l;
      ht = Matrix::Zero(nm, nl);
      break;
    default:
      constraint_form = false;
      break;
  }

  if (constraint_form) {
    Matrix stacked_exact(nl, nl + nm);
    stacked_exact << l.transpose(), h.transpose();
    Matrix stacked_approx(nl, nl + nm);
    stacked_approx << lt.transpose(), ht.transpose();
    Eigen::BDCSVD<Matrix> svd_diff(stacked_exact - stacked_approx);
    Eigen::BDCSVD<Matrix> svd_approx(stacked_approx);
    const double sigma_min = svd_approx.singularValues().minCoeff();
    report.bound = sigma_min > 0.0 ? svd_diff.singularValues().maxCoeff() / sigma_min : kInf;
  }

  if (spec.kind == PrecondKind::ExactConstraintL) {
    Matrix linv = l.inverse();
    Matrix d = dense_cov_block(sys);
    Matrix g = h * linv * d * linv.transpose() * h.transpose();
    Eigen::SelfAdjointEigenSolver<Matrix> eg(0.5 * (g + g.transpose()));
    Eigen::SelfAdjointEigenSolver<Matrix> er(dense_obs_cov(sys));
    report.im_bound = std::sqrt(eg.eigenvalues().maxCoeff() / er.eigenvalues().minCoeff());
  }
  return report;
}

}  // namespace lrda
