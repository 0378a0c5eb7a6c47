#include "lrda/models.hpp"

#include <Eigen/LU>

#include <stdexcept>

namespace lrda {

Matrix ad_build_propagator(Index n, double dt, double c_d, double c_a) {
  if (n < 3) throw std::invalid_argument("ad_build_propagator: need n >= 3");
  const double dx = 1.0 / static_cast<double>(n - 1);

  Matrix op = Matrix::Zero(n, n);
  for (Index i = 1; i + 1 < n; ++i) {
    op(i, i - 1) = c_d / (dx * dx) - c_a / (2.0 * dx);
    op(i, i) = -2.0 * c_d / (dx * dx);
    op(i, i + 1) = c_d / (dx * dx) + c_a / (2.0 * dx);
  }

  Matrix implicit = Matrix::Identity(n, n) - 0.5 * dt * op;
  Matrix explicit_part = Matrix::Identity(n, n) + 0.5 * dt * op;
  Eigen::PartialPivLU<Matrix> lu(implicit);
  if (std::abs(lu.determinant()) < 1e-300)
    throw std::runtime_error("ad_build_propagator: implicit matrix is singular");
  return lu.solve(explicit_part);
}

Lorenz95Model::Lorenz95Model(Index n_, double forcing_, double dt_)
    : n(n_), forcing(forcing_), dt(dt_) {
  if (n < 4) throw std::invalid_argument("Lorenz95Model: need n >= 4");
  if (dt <= 0.0) throw std::invalid_argument("Lorenz95Model: need dt > 0");
}

Vector Lorenz95Model::rhs(const Vector& x) const {
  Vector out(n);
  for (Index i = 0; i < n; ++i) {
    const Index im1 = (i - 1 + n) % n;
    const Index im2 = (i - 2 + n) % n;
    const Index ip1 = (i + 1) % n;
    out(i) = x(im1) * (x(ip1) - x(im2)) - x(i) + forcing;
  }
  return out;
}

Vector Lorenz95Model::step(const Vector& x) const {
  Vector k1 = rhs(x);
  Vector k2 = rhs(x + 0.5 * dt * k1);
  Vector k3 = rhs(x + 0.5 * dt * k2);
  Vector k4 = rhs(x + dt * k3);
  return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

Matrix Lorenz95Model::rhs_jacobian(const Vector& x) const {
  Matrix j = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    const Index im1 = (i - 1 + n) % n;
    const Index im2 = (i - 2 + n) % n;
    const Index ip1 = (i + 1) % n;
    j(i, im2) -= x(im1);
    j(i, im1) += x(ip1) - x(im2);
    j(i, i) -= 1.0;
    j(i, ip1) += x(im1);
  }
  return j;
}

Matrix Lorenz95Model::tangent_linear(const Vector& x) const {
  Vector k1 = rhs(x);
  Vector k2 = rhs(x + 0.5 * dt * k1);
  Vector k3 = rhs(x + 0.5 * dt * k2);

  Matrix eye = Matrix::Identity(n, n);
  Matrix a1 = rhs_jacobian(x);
  Matrix a2 = rhs_jacobian(x + 0.5 * dt * k1) * (eye + 0.5 * dt * a1);
  Matrix a3 = rhs_jacobian(x + 0.5 * dt * k2) * (eye + 0.5 * dt * a2);
  Matrix a4 = rhs_jacobian(x + dt * k3) * (eye + dt * a3);
  return eye + (dt / 6.0) * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
}

ObservationOperator ObservationOperator::every_kth(Index n, Index stride, Index offset) {
  if (stride < 1 || offset < 0 || offset >= n)
    throw std::invalid_argument("ObservationOperator: need stride >= 1, 0 <= offset < n");
  return ObservationOperator{n, stride, offset};
}

Matrix ObservationOperator::matrix() const {
  Matrix h = Matrix::Zero(obs_count(), n);
  Index row = 0;
  for (Index i = offset; i < n; i += stride) h(row++, i) = 1.0;
  return h;
}

Vector ObservationOperator::observe(const Vector& x) const {
  Vector y(obs_count());
  Index row = 0;
  for (Index i = offset; i < n; i += stride) y(row++) = x(i);
  return y;
}

CovarianceModel::CovarianceModel(Kind kind, Index dim, double sigma2, double length)
    : kind_(kind), dim_(dim), sigma2_(sigma2), length_(length) {
  if (dim < 1) throw std::invalid_argument("CovarianceModel: dimension must be positive");
  if (sigma2 <= 0.0) throw std::invalid_argument("CovarianceModel: sigma^2 must be positive");
  if (kind == Kind::ExpDecay && length <= 0.0)
    throw std::invalid_argument("CovarianceModel: decay length must be positive");
  llt_.compute(matrix());
  if (llt_.info() != Eigen::Success)
    throw std::runtime_error("CovarianceModel: matrix is not positive definite");
}

CovarianceModel CovarianceModel::scaled_identity(Index dim, double sigma2) {
  return CovarianceModel(Kind::ScaledIdentity, dim, sigma2, 0.0);
}

CovarianceModel CovarianceModel::exp_decay(Index dim, double sigma2, double length) {
  return CovarianceModel(Kind::ExpDecay, dim, sigma2, length);
}

Matrix CovarianceModel::matrix() const {
  if (kind_ == Kind::ScaledIdentity)
    return sigma2_ * Matrix::Identity(dim_, dim_);
  Matrix c(dim_, dim_);
  for (Index i = 0; i < dim_; ++i)
    for (Index j = 0; j < dim_; ++j)
      c(i, j) = sigma2_ * std::exp(-std::abs(static_cast<double>(i - j)) / length_);
  return c;
}

Vector CovarianceModel::apply(const Vector& v) const {
  if (kind_ == Kind::ScaledIdentity) return sigma2_ * v;
  return matrix() * v;
}

Vector CovarianceModel::apply_inverse(const Vector& v) const {
  if (kind_ == Kind::ScaledIdentity) return v / sigma2_;
  return llt_.solve(v);
}

Matrix CovarianceModel::apply_inverse(const Matrix& m) const {
  if (kind_ == Kind::ScaledIdentity) return m / sigma2_;
  return llt_.solve(m);
}

Vector CovarianceModel::sample(std::mt19937_64& rng) const {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector z(dim_);
  for (Index i = 0; i < dim_; ++i) z(i) = normal(rng);
  return llt_.matrixL() * z;
}

}  // namespace lrda
