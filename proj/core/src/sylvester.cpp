#include "lrda/sylvester.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include <stdexcept>

namespace lrda {

Matrix solve_sylvester(const Matrix& a, const Matrix& b, const Matrix& c) {
  const Index n = a.rows();
  const Index m = b.rows();
  if (a.cols() != n || b.cols() != m)
    throw std::invalid_argument("solve_sylvester: A and B must be square");
  if (c.rows() != n || c.cols() != m)
    throw std::invalid_argument("solve_sylvester: C must be rows(A) x rows(B)");
  if (n * m > kSylvesterGuard)
    throw std::invalid_argument("solve_sylvester: problem exceeds the desk-scale guard");

  Eigen::RealSchur<Matrix> schur(b);
  const Matrix& t = schur.matrixT();
  const Matrix& v = schur.matrixU();

  Matrix rhs = c * v;
  Matrix y(n, m);

  const double scale = a.norm() + t.norm() + 1.0;
  bool have_cached = false;
  double cached_shift = 0.0;
  Eigen::FullPivLU<Matrix> lu;

  Index j = 0;
  while (j < m) {
    const bool pair = (j + 1 < m) && (std::abs(t(j + 1, j)) > 1e-14 * scale);
    if (!pair) {
      Vector r = rhs.col(j) - y.leftCols(j) * t.topRows(j).col(j);
      const double shift = t(j, j);
      if (!have_cached || shift != cached_shift) {
        lu.compute(a + shift * Matrix::Identity(n, n));
        if (!lu.isInvertible())
          throw std::runtime_error(
              "solve_sylvester: singular shifted system, spectra of A and -B intersect");
        have_cached = true;
        cached_shift = shift;
      }
      y.col(j) = lu.solve(r);
      ++j;
    } else {
      // 2x2 bump in the Schur form of B: coupled solve for two columns.
      Vector r0 = rhs.col(j) - y.leftCols(j) * t.topRows(j).col(j);
      Vector r1 = rhs.col(j + 1) - y.leftCols(j) * t.topRows(j).col(j + 1);
      Matrix coupled(2 * n, 2 * n);
      coupled.topLeftCorner(n, n) = a + t(j, j) * Matrix::Identity(n, n);
      coupled.topRightCorner(n, n) = t(j + 1, j) * Matrix::Identity(n, n);
      coupled.bottomLeftCorner(n, n) = t(j, j + 1) * Matrix::Identity(n, n);
      coupled.bottomRightCorner(n, n) = a + t(j + 1, j + 1) * Matrix::Identity(n, n);
      Eigen::FullPivLU<Matrix> lu2(coupled);
      if (!lu2.isInvertible())
        throw std::runtime_error(
            "solve_sylvester: singular coupled system, spectra of A and -B intersect");
      Vector stacked(2 * n);
      stacked << r0, r1;
      Vector sol = lu2.solve(stacked);
      y.col(j) = sol.head(n);
      y.col(j + 1) = sol.tail(n);
      have_cached = false;
      j += 2;
    }
  }
  return y * v.transpose();
}

}  // namespace lrda
