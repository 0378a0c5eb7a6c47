#include "lrda/low_rank.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>

#include <sstream>
#include <stdexcept>

namespace lrda {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw std::invalid_argument(msg); }

std::string dims(const Matrix& m) {
  std::ostringstream os;
  os << m.rows() << "x" << m.cols();
  return os.str();
}

}  // namespace

void TruncationPolicy::validate() const {
  if (rel_tol < 0.0 || rel_tol >= 1.0)
    fail("TruncationPolicy: rel_tol must lie in [0,1), got " + std::to_string(rel_tol));
  if (max_rank && *max_rank < 1)
    fail("TruncationPolicy: max_rank must be >= 1 when bounded, got " +
         std::to_string(*max_rank));
}

LowRankFactor::LowRankFactor(Matrix left, Matrix right)
    : left_(std::move(left)), right_(std::move(right)) {
  if (left_.cols() != right_.cols())
    fail("LowRankFactor: column counts differ (left " + dims(left_) + ", right " +
         dims(right_) + ")");
}

LowRankFactor concat(const LowRankFactor& a, const LowRankFactor& b) {
  if (a.rows_left() != b.rows_left())
    fail("concat: left-factor row mismatch (" + std::to_string(a.rows_left()) + " vs " +
         std::to_string(b.rows_left()) + ")");
  if (a.rows_right() != b.rows_right())
    fail("concat: right-factor row mismatch (" + std::to_string(a.rows_right()) + " vs " +
         std::to_string(b.rows_right()) + ")");
  Matrix left(a.rows_left(), a.rank() + b.rank());
  left << a.left(), b.left();
  Matrix right(a.rows_right(), a.rank() + b.rank());
  right << a.right(), b.right();
  return LowRankFactor(std::move(left), std::move(right));
}

LowRankFactor scale(const LowRankFactor& a, double s) {
  return LowRankFactor(s * a.left(), a.right());
}

LowRankFactor truncate(const LowRankFactor& a, const TruncationPolicy& policy) {
  policy.validate();
  if (a.rank() == 0) return a;

  // Thin QR of each factor, SVD of the small core R_l * R_r^T.
  const Index k = a.rank();
  const Index rl = std::min(a.rows_left(), k);
  const Index rr = std::min(a.rows_right(), k);

  Eigen::HouseholderQR<Matrix> qr_left(a.left());
  Eigen::HouseholderQR<Matrix> qr_right(a.right());
  Matrix q_left = qr_left.householderQ() * Matrix::Identity(a.rows_left(), rl);
  Matrix q_right = qr_right.householderQ() * Matrix::Identity(a.rows_right(), rr);
  Matrix r_left = qr_left.matrixQR().topRows(rl).triangularView<Eigen::Upper>();
  Matrix r_right = qr_right.matrixQR().topRows(rr).triangularView<Eigen::Upper>();

  Matrix core = r_left * r_right.transpose();
  Eigen::BDCSVD<Matrix> svd(core, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& sigma = svd.singularValues();

  const double s1 = sigma.size() > 0 ? sigma(0) : 0.0;
  if (s1 <= 0.0) return LowRankFactor::zero(a.rows_left(), a.rows_right());

  const double threshold = std::max(policy.rel_tol, kRankFloor) * s1;
  Index keep = 0;
  while (keep < sigma.size() && sigma(keep) >= threshold) ++keep;
  if (policy.max_rank) keep = std::min(keep, *policy.max_rank);
  if (keep == 0) return LowRankFactor::zero(a.rows_left(), a.rows_right());

  Matrix left = q_left * svd.matrixU().leftCols(keep) * sigma.head(keep).asDiagonal();
  Matrix right = q_right * svd.matrixV().leftCols(keep);
  return LowRankFactor(std::move(left), std::move(right));
}

Matrix to_dense(const LowRankFactor& a) {
  if (a.rows_left() * a.rows_right() > kDenseGuard)
    fail("to_dense: factor value is " + std::to_string(a.rows_left()) + "x" +
         std::to_string(a.rows_right()) + ", above the dense guard of " +
         std::to_string(kDenseGuard) + " elements");
  return a.left() * a.right().transpose();
}

LowRankFactor from_dense(const Matrix& m, const TruncationPolicy& policy) {
  policy.validate();
  Eigen::BDCSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& sigma = svd.singularValues();
  const double s1 = sigma.size() > 0 ? sigma(0) : 0.0;
  if (s1 <= 0.0) return LowRankFactor::zero(m.rows(), m.cols());

  const double threshold = std::max(policy.rel_tol, kRankFloor) * s1;
  Index keep = 0;
  while (keep < sigma.size() && sigma(keep) >= threshold) ++keep;
  if (policy.max_rank) keep = std::min(keep, *policy.max_rank);
  if (keep == 0) return LowRankFactor::zero(m.rows(), m.cols());

  Matrix left = svd.matrixU().leftCols(keep) * sigma.head(keep).asDiagonal();
  Matrix right = svd.matrixV().leftCols(keep);
  return LowRankFactor(std::move(left), std::move(right));
}

Vector singular_values(const LowRankFactor& a) {
  if (a.rank() == 0) return Vector(0);
  const Index rl = std::min(a.rows_left(), a.rank());
  const Index rr = std::min(a.rows_right(), a.rank());
  Eigen::HouseholderQR<Matrix> qr_left(a.left());
  Eigen::HouseholderQR<Matrix> qr_right(a.right());
  Matrix r_left = qr_left.matrixQR().topRows(rl).triangularView<Eigen::Upper>();
  Matrix r_right = qr_right.matrixQR().topRows(rr).triangularView<Eigen::Upper>();
  Eigen::BDCSVD<Matrix> svd(r_left * r_right.transpose());
  return svd.singularValues();
}

double trace_product(const LowRankFactor& a, const LowRankFactor& b) {
  if (a.rows_left() != b.rows_left() || a.rows_right() != b.rows_right())
    fail("trace_product: value shapes differ (" + std::to_string(a.rows_left()) + "x" +
         std::to_string(a.rows_right()) + " vs " + std::to_string(b.rows_left()) + "x" +
         std::to_string(b.rows_right()) + ")");
  if (a.rank() == 0 || b.rank() == 0) return 0.0;
  Matrix gram_left = a.left().transpose() * b.left();       // k_a x k_b
  Matrix gram_right = b.right().transpose() * a.right();    // k_b x k_a
  return (gram_left.array() * gram_right.transpose().array()).sum();
}

TripleBlock::TripleBlock(LowRankFactor lam_, LowRankFactor mu_, LowRankFactor dx_)
    : lam(std::move(lam_)), mu(std::move(mu_)), dx(std::move(dx_)) {
  if (lam.rows_right() != mu.rows_right() || lam.rows_right() != dx.rows_right())
    fail("TripleBlock: right factors disagree on time dimension (" +
         std::to_string(lam.rows_right()) + ", " + std::to_string(mu.rows_right()) + ", " +
         std::to_string(dx.rows_right()) + ")");
  if (lam.rows_left() != dx.rows_left())
    fail("TripleBlock: lam and dx state dimensions differ (" +
         std::to_string(lam.rows_left()) + " vs " + std::to_string(dx.rows_left()) + ")");
}

TripleBlock concat(const TripleBlock& a, const TripleBlock& b) {
  return TripleBlock(concat(a.lam, b.lam), concat(a.mu, b.mu), concat(a.dx, b.dx));
}

TripleBlock scale(const TripleBlock& a, double s) {
  return TripleBlock(scale(a.lam, s), scale(a.mu, s), scale(a.dx, s));
}

TripleBlock truncate(const TripleBlock& a, const TruncationPolicy& policy) {
  return TripleBlock(truncate(a.lam, policy), truncate(a.mu, policy),
                     truncate(a.dx, policy));
}

double trace_product(const TripleBlock& a, const TripleBlock& b) {
  return trace_product(a.lam, b.lam) + trace_product(a.mu, b.mu) +
         trace_product(a.dx, b.dx);
}

}  // namespace lrda
