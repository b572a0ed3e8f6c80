#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace syncluster {

// Dense n x n grid of d x d real blocks, stored as one (nd) x (nd) matrix.
// Immutable from the caller's perspective once filled; all heavy operations
// below are free functions returning fresh values.
class BlockMatrix {
 public:
  BlockMatrix(int n, int d)
      : n_(n), d_(d), data_(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n) * d,
                                                  static_cast<Eigen::Index>(n) * d)) {
    if (n < 1 || d < 1)
      throw std::invalid_argument("BlockMatrix: dimensions must be positive");
  }

  BlockMatrix(int n, int d, Eigen::MatrixXd data) : n_(n), d_(d), data_(std::move(data)) {
    if (n < 1 || d < 1)
      throw std::invalid_argument("BlockMatrix: dimensions must be positive");
    if (data_.rows() != static_cast<Eigen::Index>(n) * d || data_.cols() != data_.rows())
      throw std::invalid_argument("BlockMatrix: data size does not match n*d");
  }

  static BlockMatrix identity(int n, int d) {
    BlockMatrix m(n, d);
    m.data_.setIdentity();
    return m;
  }

  int blocks() const { return n_; }
  int block_dim() const { return d_; }
  Eigen::Index size() const { return data_.rows(); }

  Eigen::Block<Eigen::MatrixXd> block(int i, int j) {
    return data_.block(static_cast<Eigen::Index>(i) * d_,
                       static_cast<Eigen::Index>(j) * d_, d_, d_);
  }
  Eigen::Block<const Eigen::MatrixXd> block(int i, int j) const {
    return data_.block(static_cast<Eigen::Index>(i) * d_,
                       static_cast<Eigen::Index>(j) * d_, d_, d_);
  }

  Eigen::MatrixXd& matrix() { return data_; }
  const Eigen::MatrixXd& matrix() const { return data_; }

  double norm() const { return data_.norm(); }

  bool is_block_symmetric(double tol = 1e-12) const {
    return (data_ - data_.transpose()).cwiseAbs().maxCoeff() <= tol;
  }

  void symmetrize() { data_ = ((data_ + data_.transpose()) * 0.5).eval(); }

 private:
  int n_, d_;
  Eigen::MatrixXd data_;
};

// n x n matrix of blockwise Frobenius norms. For block-symmetric input the
// mirrored entries are filled from one evaluation, keeping the result exactly
// symmetric regardless of summation order.
inline Eigen::MatrixXd block_norms(const BlockMatrix& m) {
  const int n = m.blocks();
  const bool sym = m.is_block_symmetric(1e-12 * std::max(1.0, m.norm()));
  Eigen::MatrixXd out(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = sym ? i : 0; j < n; ++j) {
      out(i, j) = m.block(i, j).norm();
      if (sym) out(j, i) = out(i, j);
    }
  }
  return out;
}

namespace detail {

inline void require_symmetric(const Eigen::MatrixXd& s, const char* who) {
  const double scale = std::max(1.0, s.norm());
  if ((s - s.transpose()).norm() > 1e-10 * scale)
    throw std::invalid_argument(std::string(who) + ": input is not symmetric");
}

}  // namespace detail

// Smallest eigenvalue of a symmetric matrix. Residual accuracy of the
// underlying solver is well below the 1e-9 * ||S|| contract.
inline double min_eigenvalue(const BlockMatrix& s) {
  detail::require_symmetric(s.matrix(), "min_eigenvalue");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s.matrix(), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

// Euclidean projection onto the PSD cone: clamp negative eigenvalues to zero.
inline BlockMatrix psd_project(const BlockMatrix& s) {
  detail::require_symmetric(s.matrix(), "psd_project");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s.matrix());
  Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0);
  Eigen::MatrixXd out = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
  out = ((out + out.transpose()) * 0.5).eval();
  return BlockMatrix(s.blocks(), s.block_dim(), std::move(out));
}

namespace detail {

// Group soft-threshold scale factors for projecting blocks with the given
// Frobenius norms onto { sum_j ||B_j||_F <= radius }. The threshold lambda is
// found exactly by sorting (piecewise-linear solve), no bisection.
inline std::vector<double> group_l1_scales(const std::vector<double>& norms, double radius) {
  const std::size_t k = norms.size();
  std::vector<double> scales(k, 1.0);
  const double total = std::accumulate(norms.begin(), norms.end(), 0.0);
  if (total <= radius) return scales;
  std::vector<double> sorted(norms);
  std::sort(sorted.begin(), sorted.end(), std::greater<double>());
  // Find lambda with sum_j max(n_j - lambda, 0) = radius.
  double cumsum = 0.0;
  double lambda = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    cumsum += sorted[j];
    const double candidate = (cumsum - radius) / static_cast<double>(j + 1);
    if (j + 1 == k || candidate >= sorted[j + 1]) {
      lambda = candidate;
      break;
    }
  }
  for (std::size_t j = 0; j < k; ++j)
    scales[j] = norms[j] > lambda ? (norms[j] - lambda) / norms[j] : 0.0;
  return scales;
}

}  // namespace detail

// Euclidean projection of a list of d x d blocks onto the group-l1 ball
// { sum_j ||B_j||_F <= radius }. Zero blocks stay zero.
inline std::vector<Eigen::MatrixXd> group_l1_project(const std::vector<Eigen::MatrixXd>& blocks,
                                                     double radius) {
  if (radius < 0.0) throw std::invalid_argument("group_l1_project: negative radius");
  std::vector<double> norms(blocks.size());
  for (std::size_t j = 0; j < blocks.size(); ++j) norms[j] = blocks[j].norm();
  const std::vector<double> scales = detail::group_l1_scales(norms, radius);
  std::vector<Eigen::MatrixXd> out(blocks.size());
  for (std::size_t j = 0; j < blocks.size(); ++j) out[j] = blocks[j] * scales[j];
  return out;
}

// ---------------------------------------------------------------------------
// JCDB1 on-disk format: magic "JCDB1", u32 LE n, u32 LE d, then (nd)^2 float64
// LE values in row-major order.

inline void write_jcdb(const std::string& path, const BlockMatrix& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_jcdb: cannot open " + path);
  out.write("JCDB1", 5);
  const std::uint32_t n = static_cast<std::uint32_t>(m.blocks());
  const std::uint32_t d = static_cast<std::uint32_t>(m.block_dim());
  out.write(reinterpret_cast<const char*>(&n), 4);
  out.write(reinterpret_cast<const char*>(&d), 4);
  const Eigen::Index nd = m.size();
  std::vector<double> row(static_cast<std::size_t>(nd));
  for (Eigen::Index r = 0; r < nd; ++r) {
    for (Eigen::Index c = 0; c < nd; ++c) row[static_cast<std::size_t>(c)] = m.matrix()(r, c);
    out.write(reinterpret_cast<const char*>(row.data()),
              static_cast<std::streamsize>(sizeof(double) * row.size()));
  }
  if (!out) throw std::runtime_error("write_jcdb: write failed for " + path);
}

inline BlockMatrix read_jcdb(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_jcdb: cannot open " + path);
  char magic[5];
  in.read(magic, 5);
  if (!in || std::memcmp(magic, "JCDB1", 5) != 0)
    throw std::runtime_error("read_jcdb: bad magic in " + path);
  std::uint32_t n = 0, d = 0;
  in.read(reinterpret_cast<char*>(&n), 4);
  in.read(reinterpret_cast<char*>(&d), 4);
  if (!in || n == 0 || d == 0) throw std::runtime_error("read_jcdb: bad header in " + path);
  const Eigen::Index nd = static_cast<Eigen::Index>(n) * d;
  Eigen::MatrixXd data(nd, nd);
  std::vector<double> row(static_cast<std::size_t>(nd));
  for (Eigen::Index r = 0; r < nd; ++r) {
    in.read(reinterpret_cast<char*>(row.data()),
            static_cast<std::streamsize>(sizeof(double) * row.size()));
    if (!in) throw std::runtime_error("read_jcdb: truncated data in " + path);
    for (Eigen::Index c = 0; c < nd; ++c) data(r, c) = row[static_cast<std::size_t>(c)];
  }
  return BlockMatrix(static_cast<int>(n), static_cast<int>(d), std::move(data));
}

}  // namespace syncluster
