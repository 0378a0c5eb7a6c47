#include "lrda/assimilation.hpp"

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include <cmath>
#include <memory>
#include <stdexcept>

namespace lrda {

DynamicsModel make_dynamics(const AdvectionDiffusionModel& model) {
  DynamicsModel d;
  d.n = model.n;
  d.constant_tlm = true;
  d.step = [model](const Vector& x) { return model.step(x); };
  d.tlm = [model](const Vector&) { return model.tangent_linear(); };
  return d;
}

DynamicsModel make_dynamics(const Lorenz95Model& model) {
  DynamicsModel d;
  d.n = model.n;
  d.constant_tlm = false;
  d.step = [model](const Vector& x) { return model.step(x); };
  d.tlm = [model](const Vector& x) { return model.tangent_linear(x); };
  return d;
}

std::vector<Vector> propagate(const DynamicsModel& model, const Vector& x0, Index steps) {
  std::vector<Vector> out;
  out.reserve(steps + 1);
  out.push_back(x0);
  for (Index k = 0; k < steps; ++k) out.push_back(model.step(out.back()));
  return out;
}

LinearizedSystem linearize(const AssimilationProblem& problem,
                           const std::vector<Vector>& trajectory) {
  const Index N = problem.window;
  const Index n = problem.model.n;
  const Index p = problem.obs.obs_count();
  if (static_cast<Index>(trajectory.size()) < N + 1)
    throw std::invalid_argument("linearize: trajectory must hold N+1 states");

  Matrix b(n, N + 1);
  b.col(0) = problem.background - trajectory[0];
  for (Index k = 1; k <= N; ++k)
    b.col(k) = problem.model.step(trajectory[k - 1]) - trajectory[k];

  Matrix d(p, N + 1);
  for (Index k = 0; k <= N; ++k)
    d.col(k) = problem.observations[k] - problem.obs.observe(trajectory[k]);

  Matrix B = problem.cov_b.matrix();
  Matrix Q = problem.cov_q.matrix();
  Matrix R = problem.cov_r.matrix();
  Matrix H = problem.obs.matrix();

  if (problem.model.constant_tlm) {
    TimeInvariantSystem sys(n, N, p, B, Q, R, problem.model.tlm(trajectory[0]), H);
    return LinearizedSystem{std::move(sys), std::move(b), std::move(d)};
  }
  std::vector<Matrix> Ms;
  Ms.reserve(N);
  for (Index k = 1; k <= N; ++k) Ms.push_back(problem.model.tlm(trajectory[k - 1]));
  TimeVaryingSystem sys(n, N, p, B, std::vector<Matrix>(N, Q),
                        std::vector<Matrix>(N + 1, R), std::move(Ms),
                        std::vector<Matrix>(N + 1, H));
  return LinearizedSystem{std::move(sys), std::move(b), std::move(d)};
}

std::pair<LowRankFactor, LowRankFactor> build_rhs(const AssimilationProblem& problem,
                                                  const std::vector<Vector>& trajectory,
                                                  const TruncationPolicy& policy) {
  LinearizedSystem lin = linearize(problem, trajectory);
  return {from_dense(lin.b, policy), from_dense(lin.d, policy)};
}

namespace {

// Exact block elimination of the saddle system through the reduced normal
// equations (L^T D^-1 L + H^T R^-1 H) dx = L^T D^-1 b + H^T R^-1 d, followed
// by back-substitution for the two adjoint fields. The reduced operator is
// SPD block tridiagonal; a block Cholesky sweep solves it.
template <typename GetQ, typename GetR, typename GetM, typename GetH>
FullRankSolution reduced_solve(Index n, Index N, Index p, const Matrix& B, GetQ Qk,
                               GetR Rk, GetM Mk, GetH Hk, const Matrix& b,
                               const Matrix& d) {
  std::vector<Eigen::LLT<Matrix>> llt_d(N + 1);
  llt_d[0].compute(B);
  for (Index k = 1; k <= N; ++k) llt_d[k].compute(Qk(k));
  std::vector<Eigen::LLT<Matrix>> llt_r(N + 1);
  for (Index k = 0; k <= N; ++k) llt_r[k].compute(Rk(k));

  std::vector<Matrix> diag(N + 1), upper(N);
  std::vector<Vector> g(N + 1);
  const Matrix eye = Matrix::Identity(n, n);
  for (Index k = 0; k <= N; ++k) {
    Matrix t = llt_d[k].solve(eye);
    t += Hk(k).transpose() * llt_r[k].solve(Hk(k));
    if (k < N) {
      Matrix qm = llt_d[k + 1].solve(Mk(k + 1));
      t += Mk(k + 1).transpose() * qm;
      upper[k] = -qm.transpose();  // block (k, k+1)
    }
    diag[k] = std::move(t);

    Vector gk = llt_d[k].solve(b.col(k));
    if (k < N) gk -= Mk(k + 1).transpose() * llt_d[k + 1].solve(b.col(k + 1));
    gk += Hk(k).transpose() * llt_r[k].solve(d.col(k));
    g[k] = std::move(gk);
  }

  // Block Cholesky forward sweep and back substitution.
  std::vector<Eigen::LLT<Matrix>> llt_s(N + 1);
  std::vector<Vector> y(N + 1);
  llt_s[0].compute(diag[0]);
  if (llt_s[0].info() != Eigen::Success)
    throw std::runtime_error("full_rank_solve: reduced system is not positive definite");
  y[0] = g[0];
  for (Index k = 1; k <= N; ++k) {
    Matrix w = llt_s[k - 1].solve(upper[k - 1]);
    llt_s[k].compute(diag[k] - upper[k - 1].transpose() * w);
    if (llt_s[k].info() != Eigen::Success)
      throw std::runtime_error("full_rank_solve: reduced system is not positive definite");
    y[k] = g[k] - upper[k - 1].transpose() * llt_s[k - 1].solve(y[k - 1]);
  }

  Matrix dx(n, N + 1);
  dx.col(N) = llt_s[N].solve(y[N]);
  for (Index k = N - 1; k >= 0; --k)
    dx.col(k) = llt_s[k].solve(y[k] - upper[k] * dx.col(k + 1));

  Matrix lam(n, N + 1), mu(p, N + 1);
  lam.col(0) = llt_d[0].solve(b.col(0) - dx.col(0));
  for (Index k = 1; k <= N; ++k)
    lam.col(k) = llt_d[k].solve(b.col(k) - dx.col(k) + Mk(k) * dx.col(k - 1));
  for (Index k = 0; k <= N; ++k)
    mu.col(k) = llt_r[k].solve(d.col(k) - Hk(k) * dx.col(k));
  return FullRankSolution{std::move(lam), std::move(mu), std::move(dx)};
}

FullRankSolution dense_direct_solve(const Matrix& a, Index n, Index N, Index p,
                                    const Matrix& b, const Matrix& d) {
  Vector rhs = Vector::Zero(a.rows());
  rhs.head(n * (N + 1)) = vectorize(b);
  rhs.segment(n * (N + 1), p * (N + 1)) = vectorize(d);
  Eigen::PartialPivLU<Matrix> lu(a);
  Vector sol = lu.solve(rhs);
  if (!sol.allFinite())
    throw std::runtime_error("full_rank_solve: singular saddle system");
  return FullRankSolution{unvectorize(sol.head(n * (N + 1)), n, N + 1),
                          unvectorize(sol.segment(n * (N + 1), p * (N + 1)), p, N + 1),
                          unvectorize(sol.tail(n * (N + 1)), n, N + 1)};
}

}  // namespace

FullRankSolution full_rank_solve(const LinearizedSystem& lin) {
  return std::visit(
      [&](const auto& sys) -> FullRankSolution {
        using S = std::decay_t<decltype(sys)>;
        if (sys.saddle_dim() <= kAssembleGuard)
          return dense_direct_solve(assemble_dense(sys), sys.n, sys.steps, sys.p, lin.b,
                                    lin.d);
        if constexpr (std::is_same_v<S, TimeInvariantSystem>) {
          return reduced_solve(
              sys.n, sys.steps, sys.p, sys.B, [&](Index) -> const Matrix& { return sys.Q; },
              [&](Index) -> const Matrix& { return sys.R; },
              [&](Index) -> const Matrix& { return sys.M; },
              [&](Index) -> const Matrix& { return sys.H; }, lin.b, lin.d);
        } else {
          return reduced_solve(
              sys.n, sys.steps, sys.p, sys.B,
              [&](Index k) -> const Matrix& { return sys.Q[k - 1]; },
              [&](Index k) -> const Matrix& { return sys.R[k]; },
              [&](Index k) -> const Matrix& { return sys.M[k - 1]; },
              [&](Index k) -> const Matrix& { return sys.H[k]; }, lin.b, lin.d);
        }
      },
      lin.sys);
}

CostBreakdown evaluate_cost(const AssimilationProblem& problem,
                            const std::vector<Vector>& trajectory) {
  CostBreakdown cost;
  Vector db = trajectory[0] - problem.background;
  cost.background = 0.5 * db.dot(problem.cov_b.apply_inverse(db));
  for (Index k = 0; k <= problem.window; ++k) {
    Vector dy = problem.observations[k] - problem.obs.observe(trajectory[k]);
    cost.observation += 0.5 * dy.dot(problem.cov_r.apply_inverse(dy));
  }
  for (Index k = 1; k <= problem.window; ++k) {
    Vector dq = trajectory[k] - problem.model.step(trajectory[k - 1]);
    cost.model_error += 0.5 * dq.dot(problem.cov_q.apply_inverse(dq));
  }
  cost.total = cost.background + cost.observation + cost.model_error;
  return cost;
}

StorageReport storage_report(Index n, Index steps, Index p, Index rank) {
  StorageReport report;
  report.n = n;
  report.steps = steps;
  report.p = p;
  report.rank = rank;
  report.full_elems = static_cast<long long>(n) * (steps + 1);
  report.low_elems = static_cast<long long>(rank) * (n + steps + 1);
  report.reduction =
      1.0 - static_cast<double>(report.low_elems) / static_cast<double>(report.full_elems);
  return report;
}

std::vector<double> rmse_series(const std::vector<Vector>& a,
                                const std::vector<Vector>& b) {
  if (a.size() != b.size())
    throw std::invalid_argument("rmse_series: trajectory lengths differ");
  std::vector<double> out;
  out.reserve(a.size());
  for (std::size_t t = 0; t < a.size(); ++t) {
    if (a[t].size() != b[t].size())
      throw std::invalid_argument("rmse_series: state dimensions differ");
    out.push_back(std::sqrt((a[t] - b[t]).squaredNorm() / a[t].size()));
  }
  return out;
}

ExperimentResult gauss_newton(const AssimilationProblem& problem,
                              const OuterLoopConfig& cfg, Index forecast_steps) {
  if (cfg.n_outer < 1) throw std::invalid_argument("gauss_newton: n_outer must be >= 1");
  const Index N = problem.window;
  const Index n = problem.model.n;

  ExperimentResult result;
  std::vector<Vector> traj = propagate(problem.model, problem.background, N);

  for (int outer = 0; outer < cfg.n_outer; ++outer) {
    LinearizedSystem lin = linearize(problem, traj);
    Matrix dx;
    if (cfg.mode == SolverMode::FullRank) {
      dx = full_rank_solve(lin).dx;
    } else {
      const Index p = problem.obs.obs_count();
      TripleBlock rhs(from_dense(lin.b, cfg.inner.trunc),
                      from_dense(lin.d, cfg.inner.trunc), LowRankFactor::zero(n, N + 1));
      BlockOperator apply_op = std::visit(
          [](const auto& sys) -> BlockOperator {
            return [&sys](const TripleBlock& v) { return apply_saddle(sys, v); };
          },
          lin.sys);
      BlockOperator apply_precond;
      if (cfg.precond.kind == PrecondKind::Identity) {
        apply_precond = identity_operator();
      } else if (const auto* ti = std::get_if<TimeInvariantSystem>(&lin.sys)) {
        auto prec = std::make_shared<Preconditioner>(cfg.precond, *ti);
        apply_precond = [prec](const TripleBlock& v) { return prec->apply(v); };
      } else {
        throw std::invalid_argument(
            "gauss_newton: the chosen preconditioner requires a time-invariant system");
      }
      auto [sol, report] = solve_lr_gmres(apply_op, apply_precond, rhs,
                                          TripleBlock::zero(n, N, p), cfg.inner);
      result.reports.push_back(std::move(report));
      dx = to_dense(sol.dx);
    }
    for (Index k = 0; k <= N; ++k) {
      traj[k] += dx.col(k);
      if (!traj[k].allFinite())
        throw std::runtime_error("gauss_newton: non-finite state after outer iteration " +
                                 std::to_string(outer));
    }
  }

  result.analysis = traj;
  std::vector<Vector> fc = propagate(problem.model, traj[N], forecast_steps);
  result.forecast.assign(fc.begin() + 1, fc.end());

  const Index horizon = N + forecast_steps;
  if (static_cast<Index>(problem.truth.size()) >= horizon + 1) {
    std::vector<Vector> truth_window(problem.truth.begin(), problem.truth.begin() + N + 1);
    std::vector<Vector> truth_fc(problem.truth.begin() + N + 1,
                                 problem.truth.begin() + horizon + 1);
    result.rmse_analysis = rmse_series(result.analysis, truth_window);
    result.rmse_forecast = rmse_series(result.forecast, truth_fc);
    std::vector<Vector> no_assim = propagate(problem.model, problem.background, horizon);
    std::vector<Vector> truth_all(problem.truth.begin(), problem.truth.begin() + horizon + 1);
    result.rmse_background = rmse_series(no_assim, truth_all);
  }

  Index rank = std::min(n, N + 1);
  if (cfg.mode == SolverMode::LowRank && cfg.inner.trunc.max_rank)
    rank = std::min(rank, *cfg.inner.trunc.max_rank);
  result.storage = storage_report(n, N, problem.obs.obs_count(), rank);
  return result;
}

}  // namespace lrda
