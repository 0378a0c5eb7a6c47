#pragma once

#include "lrda/low_rank.hpp"

#include <Eigen/Cholesky>

#include <random>

namespace lrda {

/// One-step propagator for u_t = c_d u_xx + c_a u_x on [0,1] with homogeneous
/// Dirichlet boundaries: trapezoidal (Crank-Nicolson) time stepping over
/// second-order centered differences on a grid of n nodes including the
/// boundaries, dx = 1/(n-1). The boundary rows of the spatial operator are
/// zeroed, so boundary values are carried through unchanged.
Matrix ad_build_propagator(Index n, double dt, double c_d, double c_a);

struct AdvectionDiffusionModel {
  Index n;
  double dt, c_d, c_a;
  Matrix propagator;

  AdvectionDiffusionModel(Index n_, double dt_, double cd, double ca)
      : n(n_), dt(dt_), c_d(cd), c_a(ca), propagator(ad_build_propagator(n_, dt_, cd, ca)) {}

  Vector step(const Vector& x) const { return propagator * x; }
  const Matrix& tangent_linear() const { return propagator; }
};

/// Cyclic Lorenz-95 dynamics dx^i/dt = (x^{i+1} - x^{i-2}) x^{i-1} - x^i + f,
/// advanced with classic fourth-order Runge-Kutta.
struct Lorenz95Model {
  Index n;
  double forcing;
  double dt;

  Lorenz95Model(Index n_, double forcing_, double dt_);

  Vector rhs(const Vector& x) const;
  Vector step(const Vector& x) const;  // one RK4 step

  /// Jacobian of the single RHS evaluation at x.
  Matrix rhs_jacobian(const Vector& x) const;

  /// Exact Jacobian of the RK4 step map at x, chained through the stages.
  Matrix tangent_linear(const Vector& x) const;
};

/// Interpolatory observation operator selecting components offset,
/// offset + stride, ... The matrix rows are distinct unit vectors.
struct ObservationOperator {
  Index n{0};
  Index stride{1};
  Index offset{0};

  static ObservationOperator every_kth(Index n, Index stride, Index offset = 0);
  static ObservationOperator all(Index n) { return every_kth(n, 1, 0); }

  Index obs_count() const { return (n - offset + stride - 1) / stride; }
  Matrix matrix() const;
  Vector observe(const Vector& x) const;
};

/// Stationary covariance models: sigma^2 I or sigma^2 exp(-|i-j|/length).
/// SPD is verified by Cholesky at construction; the factor is cached for
/// inverse applications and sampling.
class CovarianceModel {
 public:
  enum class Kind { ScaledIdentity, ExpDecay };

  static CovarianceModel scaled_identity(Index dim, double sigma2);
  static CovarianceModel exp_decay(Index dim, double sigma2, double length);

  Kind kind() const { return kind_; }
  Index dim() const { return dim_; }
  double sigma2() const { return sigma2_; }
  Matrix matrix() const;

  Vector apply(const Vector& v) const;
  Vector apply_inverse(const Vector& v) const;
  Matrix apply_inverse(const Matrix& m) const;

  /// Zero-mean Gaussian draw with this covariance.
  Vector sample(std::mt19937_64& rng) const;

 private:
  CovarianceModel(Kind kind, Index dim, double sigma2, double length);

  Kind kind_;
  Index dim_;
  double sigma2_;
  double length_;
  Eigen::LLT<Matrix> llt_;
};

}  // namespace lrda
