#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <utility>
#include <vector>

#include "syncluster/rng.hpp"

namespace syncluster {

inline constexpr double kRotationTol = 1e-10;

// A d x d special-orthogonal matrix. The constructor enforces R^T R = I and
// det R = 1 to within kRotationTol.
class Rotation {
 public:
  explicit Rotation(Eigen::MatrixXd m) : mat_(std::move(m)) {
    if (mat_.rows() < 1 || mat_.rows() != mat_.cols())
      throw std::invalid_argument("Rotation: matrix must be square with d >= 1");
    const int d = static_cast<int>(mat_.rows());
    const double orth =
        (mat_.transpose() * mat_ - Eigen::MatrixXd::Identity(d, d)).norm();
    if (orth > kRotationTol)
      throw std::invalid_argument("Rotation: R^T R deviates from identity");
    if (std::abs(mat_.determinant() - 1.0) > kRotationTol)
      throw std::invalid_argument("Rotation: determinant is not +1");
  }

  static Rotation identity(int d) {
    return Rotation(Eigen::MatrixXd::Identity(d, d));
  }

  int dim() const { return static_cast<int>(mat_.rows()); }
  const Eigen::MatrixXd& matrix() const { return mat_; }

 private:
  Eigen::MatrixXd mat_;
};

namespace detail {

// Nearest rotation in Frobenius norm: U diag(1,...,1,det(UV^T)) V^T with the
// sign correction on the column of the smallest singular value (Eigen sorts
// singular values in decreasing order, so that is the last one).
inline Eigen::MatrixXd nearest_rotation(const Eigen::MatrixXd& m) {
  const int d = static_cast<int>(m.rows());
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::VectorXd signs = Eigen::VectorXd::Ones(d);
  const double det = (svd.matrixU() * svd.matrixV().transpose()).determinant();
  if (det < 0.0) signs(d - 1) = -1.0;
  return svd.matrixU() * signs.asDiagonal() * svd.matrixV().transpose();
}

}  // namespace detail

// Haar-uniform sample from SO(d): QR of a standard Gaussian matrix with the
// triangular factor's diagonal signs fixed, then one column flipped if the
// determinant came out -1.
inline Rotation sample_haar(int d, Rng& rng) {
  if (d < 1) throw std::invalid_argument("sample_haar: dimension must be >= 1");
  Eigen::MatrixXd g(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) g(i, j) = rng.normal();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ();
  const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < d; ++j)
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  if (q.determinant() < 0.0) q.col(d - 1) = -q.col(d - 1);
  return Rotation(q);
}

// Procrustes projection onto SO(d): argmin over rotations of ||M - R||_F.
inline Rotation project_to_so(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols() || m.rows() < 1)
    throw std::invalid_argument("project_to_so: matrix must be square with d >= 1");
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  if (svd.singularValues().minCoeff() <= 1e-12)
    throw std::invalid_argument("project_to_so: rank-deficient input");
  return Rotation(detail::nearest_rotation(m));
}

// min over G in SO(d) of sum_i ||est_i - truth_i G||_F^2. Rotations are only
// identifiable per cluster up to such a global G; the minimizer is the
// Procrustes alignment of sum_i truth_i^T est_i.
inline double alignment_error(const std::vector<Rotation>& estimated,
                              const std::vector<Rotation>& truth) {
  if (estimated.empty() || estimated.size() != truth.size())
    throw std::invalid_argument("alignment_error: lists must be nonempty and equal length");
  const int d = estimated.front().dim();
  Eigen::MatrixXd cross = Eigen::MatrixXd::Zero(d, d);
  for (std::size_t i = 0; i < estimated.size(); ++i) {
    if (estimated[i].dim() != d || truth[i].dim() != d)
      throw std::invalid_argument("alignment_error: dimension mismatch");
    cross += truth[i].matrix().transpose() * estimated[i].matrix();
  }
  const Eigen::MatrixXd g = detail::nearest_rotation(cross);
  double err = 0.0;
  for (std::size_t i = 0; i < estimated.size(); ++i)
    err += (estimated[i].matrix() - truth[i].matrix() * g).squaredNorm();
  return std::max(err, 0.0);
}

}  // namespace syncluster
