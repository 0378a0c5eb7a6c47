#pragma once

#include "lrda/gmres.hpp"
#include "lrda/low_rank.hpp"
#include "lrda/models.hpp"
#include "lrda/preconditioners.hpp"
#include "lrda/saddle.hpp"

#include <functional>
#include <variant>
#include <vector>

namespace lrda {

/// Type-erased forecast model: one nonlinear step and its Jacobian.
struct DynamicsModel {
  Index n{0};
  bool constant_tlm{false};
  std::function<Vector(const Vector&)> step;
  std::function<Matrix(const Vector&)> tlm;
};

DynamicsModel make_dynamics(const AdvectionDiffusionModel& model);
DynamicsModel make_dynamics(const Lorenz95Model& model);

/// Propagates x0 through `steps` model steps; returns steps+1 states.
std::vector<Vector> propagate(const DynamicsModel& model, const Vector& x0, Index steps);

/// A twin-experiment assimilation problem over a window of N steps. The truth
/// trajectory is carried for metrics only and never enters the solve path.
struct AssimilationProblem {
  DynamicsModel model;
  ObservationOperator obs;
  CovarianceModel cov_b, cov_q, cov_r;
  Index window{0};                    // N
  Vector background;                  // x_0^b
  std::vector<Vector> observations;   // y_0 .. y_N
  std::vector<Vector> truth;          // window + forecast states, metrics only
};

enum class SolverMode { LowRank, FullRank };

struct OuterLoopConfig {
  int n_outer{1};
  GmresConfig inner;
  PreconditionerSpec precond;
  SolverMode mode{SolverMode::LowRank};
};

/// Linearisation of the problem about a trajectory: the saddle operator data
/// plus the dense innovation blocks b (n x (N+1)) and d (p x (N+1)).
struct LinearizedSystem {
  std::variant<TimeInvariantSystem, TimeVaryingSystem> sys;
  Matrix b;
  Matrix d;
};

LinearizedSystem linearize(const AssimilationProblem& problem,
                           const std::vector<Vector>& trajectory);

/// Innovation blocks in factored form, compressed under the given policy;
/// the returned saddle right-hand side is (b, d, 0).
std::pair<LowRankFactor, LowRankFactor> build_rhs(const AssimilationProblem& problem,
                                                  const std::vector<Vector>& trajectory,
                                                  const TruncationPolicy& policy);

/// Direct full-rank solution of the linearised saddle system. Desk-scale
/// problems go through the dense assembly; larger ones through exact block
/// elimination of the reduced normal equations, which yields the same
/// solution. All three solution fields are exposed.
struct FullRankSolution {
  Matrix lam;  // n x (N+1)
  Matrix mu;   // p x (N+1)
  Matrix dx;   // n x (N+1)
};

FullRankSolution full_rank_solve(const LinearizedSystem& lin);

struct CostBreakdown {
  double total{0}, background{0}, observation{0}, model_error{0};
};

/// Weak-constraint cost of a trajectory: background, observation and
/// model-error terms with cached inverse-covariance applications.
CostBreakdown evaluate_cost(const AssimilationProblem& problem,
                            const std::vector<Vector>& trajectory);

struct StorageReport {
  Index n{0}, steps{0}, p{0}, rank{0};
  long long full_elems{0};
  long long low_elems{0};
  double reduction{0};
};

StorageReport storage_report(Index n, Index steps, Index p, Index rank);

/// Per-timestep root mean squared error over state components.
std::vector<double> rmse_series(const std::vector<Vector>& a, const std::vector<Vector>& b);

struct ExperimentResult {
  std::vector<Vector> analysis;         // window states after the outer loop
  std::vector<Vector> forecast;         // states after the window
  std::vector<double> rmse_analysis;    // vs truth, window
  std::vector<double> rmse_forecast;    // vs truth, forecast
  std::vector<double> rmse_background;  // propagated background vs truth
  std::vector<SolveReport> reports;     // one per outer iteration (low-rank mode)
  StorageReport storage;
};

/// Incremental outer loop: linearise about the current trajectory, solve the
/// saddle system for the increment in the configured mode, update, and after
/// n_outer rounds forecast beyond the window.
ExperimentResult gauss_newton(const AssimilationProblem& problem,
                              const OuterLoopConfig& cfg, Index forecast_steps);

}  // namespace lrda
