#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "syncluster/block_matrix.hpp"
#include "syncluster/model.hpp"
#include "syncluster/rng.hpp"
#include "syncluster/rotations.hpp"

namespace syncluster {

inline constexpr double kLogErrorFloor = 1e-12;
inline constexpr double kDefaultExactTol = 1e-3;

// Blockwise rounding: blocks with Frobenius norm >= epsilon are rescaled to
// norm sqrt(d), the rest are zeroed.
inline BlockMatrix round_solution(const BlockMatrix& m, double epsilon) {
  if (epsilon < 0.0) throw std::invalid_argument("round_solution: epsilon must be >= 0");
  const int n = m.blocks();
  const int d = m.block_dim();
  const double rd = std::sqrt(static_cast<double>(d));
  BlockMatrix out(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double nrm = m.block(i, j).norm();
      if (nrm >= epsilon && nrm > 0.0) out.block(i, j) = m.block(i, j) * (rd / nrm);
    }
  return out;
}

// Below the smallest support-block norm sqrt(d)/m_k of any normalized ground
// truth (m_k <= n), above first-order solver noise.
inline double default_rounding_epsilon(int n, int d) {
  return std::sqrt(static_cast<double>(d)) / (2.0 * n);
}

struct RecoveryError {
  double log_value = 0.0;  // ln of the floored Frobenius error
  double raw = 0.0;
};

inline RecoveryError recovery_error(const BlockMatrix& m, const BlockMatrix& m_ref) {
  if (m.size() != m_ref.size() || m.block_dim() != m_ref.block_dim())
    throw std::invalid_argument("recovery_error: dimension mismatch");
  const double raw = (m.matrix() - m_ref.matrix()).norm();
  return RecoveryError{std::log(std::max(raw, kLogErrorFloor)), raw};
}

// Relative exactness decision: ||M - M_ref||_F / ||M_ref||_F < tol.
inline bool is_exact(const BlockMatrix& m, const BlockMatrix& m_ref,
                     double tol = kDefaultExactTol) {
  if (tol <= 0.0) throw std::invalid_argument("is_exact: tol must be positive");
  return recovery_error(m, m_ref).raw / m_ref.norm() < tol;
}

// Extraction failure with diagnostics (component count seen, etc.).
class ExtractionError : public std::runtime_error {
 public:
  ExtractionError(const std::string& msg, int components_found, int k)
      : std::runtime_error(msg + " (components=" + std::to_string(components_found) +
                           ", K=" + std::to_string(k) + ")"),
        components_found(components_found),
        k(k) {}
  int components_found;
  int k;
};

struct Extraction {
  std::vector<int> labels;
  std::vector<Rotation> rotations;
};

namespace detail {

// Connected components of the graph with an edge (i, j) whenever the block
// norm clears half of the larger of the two row maxima. Row-relative
// thresholds keep the rule scale-aware per component, which matters for the
// normalized ground truth where cluster blocks scale with 1/m_k.
inline std::vector<int> norm_graph_components(const Eigen::MatrixXd& norms, int* count) {
  const int n = static_cast<int>(norms.rows());
  Eigen::VectorXd rowmax = norms.rowwise().maxCoeff();
  std::vector<int> comp(n, -1);
  int c = 0;
  std::vector<int> stack;
  for (int s = 0; s < n; ++s) {
    if (comp[s] >= 0) continue;
    comp[s] = c;
    stack.push_back(s);
    while (!stack.empty()) {
      const int i = stack.back();
      stack.pop_back();
      for (int j = 0; j < n; ++j) {
        if (comp[j] >= 0 || j == i) continue;
        if (norms(i, j) >= 0.5 * std::max(rowmax(i), rowmax(j))) {
          comp[j] = c;
          stack.push_back(j);
        }
      }
    }
    ++c;
  }
  *count = c;
  return comp;
}

// Deterministic k-means (k-means++ seeding from a fixed stream) on small
// feature vectors.
inline std::vector<int> kmeans(const Eigen::MatrixXd& features, int k) {
  const int n = static_cast<int>(features.rows());
  Rng rng(0xC0FFEEull);
  Eigen::MatrixXd centers(k, features.cols());
  centers.row(0) = features.row(static_cast<int>(rng.next_u64() % n));
  Eigen::VectorXd dist2 = (features.rowwise() - centers.row(0)).rowwise().squaredNorm();
  for (int c = 1; c < k; ++c) {
    const double total = dist2.sum();
    double pick = rng.uniform() * total;
    int chosen = n - 1;
    for (int i = 0; i < n; ++i) {
      pick -= dist2(i);
      if (pick <= 0.0) {
        chosen = i;
        break;
      }
    }
    centers.row(c) = features.row(chosen);
    dist2 = dist2.cwiseMin((features.rowwise() - centers.row(c)).rowwise().squaredNorm());
  }
  std::vector<int> assign(n, 0);
  for (int it = 0; it < 100; ++it) {
    bool changed = false;
    for (int i = 0; i < n; ++i) {
      int best = 0;
      double bd = (features.row(i) - centers.row(0)).squaredNorm();
      for (int c = 1; c < k; ++c) {
        const double dd = (features.row(i) - centers.row(c)).squaredNorm();
        if (dd < bd) {
          bd = dd;
          best = c;
        }
      }
      if (assign[i] != best) {
        assign[i] = best;
        changed = true;
      }
    }
    for (int c = 0; c < k; ++c) {
      Eigen::RowVectorXd sum = Eigen::RowVectorXd::Zero(features.cols());
      int cnt = 0;
      for (int i = 0; i < n; ++i)
        if (assign[i] == c) {
          sum += features.row(i);
          ++cnt;
        }
      if (cnt > 0) centers.row(c) = sum / cnt;
    }
    if (!changed) break;
  }
  return assign;
}

}  // namespace detail

// Discrete clusters and rotations from a recovered matrix. Primary route:
// connected components of the thresholded block-norm matrix. Fallback when the
// component count disagrees with K: k-means on rotation-invariant features of
// the leading K*d eigenvector block rows. Within each cluster the lowest-index
// node anchors the frame (R_anchor = I), so M_ij ~ R_i R_j^T.
inline Extraction extract_clusters_and_rotations(const BlockMatrix& m, int k, int d) {
  if (k < 1 || d < 1)
    throw std::invalid_argument("extract_clusters_and_rotations: K and d must be >= 1");
  if (m.block_dim() != d)
    throw std::invalid_argument("extract_clusters_and_rotations: block dimension mismatch");
  const int n = m.blocks();
  BlockMatrix sym = m;
  sym.symmetrize();
  {
    // Sanity gate only: recovered matrices carry solver noise on the order of
    // a few percent, so the rejection threshold sits well above that.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym.matrix(), Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -0.02 * std::max(1.0, sym.norm()))
      throw std::invalid_argument("extract_clusters_and_rotations: input is far from PSD");
  }

  const Eigen::MatrixXd norms = block_norms(sym);
  int count = 0;
  std::vector<int> labels = detail::norm_graph_components(norms, &count);

  if (count != k) {
    // Feature per node: Frobenius norms of its d x (K d) eigenvector block
    // row, grouped per d columns. Rotation-invariant by construction.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym.matrix());
    const Eigen::Index nd = sym.size();
    Eigen::MatrixXd features(n, k);
    for (int i = 0; i < n; ++i)
      for (int g = 0; g < k; ++g)
        features(i, g) =
            es.eigenvectors().block(i * d, nd - (g + 1) * d, d, d).norm();
    labels = detail::kmeans(features, k);
    std::vector<int> sizes(k, 0);
    for (int l : labels) sizes[l]++;
    for (int c = 0; c < k; ++c)
      if (sizes[c] == 0)
        throw ExtractionError("extract_clusters_and_rotations: fallback produced an empty cluster",
                              count, k);
  }

  // Relabel clusters by order of first appearance so output is stable.
  std::vector<int> remap(k, -1);
  int next = 0;
  for (int& l : labels) {
    if (remap[l] < 0) remap[l] = next++;
    l = remap[l];
  }
  if (next != k)
    throw ExtractionError("extract_clusters_and_rotations: cluster count mismatch", next, k);

  std::vector<int> anchor(k, -1);
  for (int i = 0; i < n; ++i)
    if (anchor[labels[i]] < 0) anchor[labels[i]] = i;

  std::vector<Rotation> rotations;
  rotations.reserve(n);
  for (int i = 0; i < n; ++i) {
    const int a = anchor[labels[i]];
    if (i == a) {
      rotations.push_back(Rotation::identity(d));
      continue;
    }
    const Eigen::MatrixXd blk = sym.block(i, a);
    if (blk.norm() < 1e-9)
      throw ExtractionError("extract_clusters_and_rotations: anchor block vanishes", count, k);
    rotations.push_back(Rotation(detail::nearest_rotation(blk)));
  }
  return Extraction{std::move(labels), std::move(rotations)};
}

// Fraction of correctly labelled nodes maximized over cluster permutations
// (brute force; K stays small in this model family).
inline double label_accuracy(const std::vector<int>& estimated, const std::vector<int>& truth,
                             int k) {
  if (estimated.size() != truth.size() || estimated.empty())
    throw std::invalid_argument("label_accuracy: label lists must match and be nonempty");
  std::vector<int> perm(k);
  std::iota(perm.begin(), perm.end(), 0);
  int best = 0;
  do {
    int correct = 0;
    for (std::size_t i = 0; i < estimated.size(); ++i)
      if (perm[estimated[i]] == truth[i]) ++correct;
    best = std::max(best, correct);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return static_cast<double>(best) / estimated.size();
}

struct RecoveryResult {
  double error_log = 0.0;
  double error_raw = 0.0;
  bool exact = false;
  std::vector<int> labels;
  std::vector<Rotation> rotations;
  double label_accuracy = 0.0;
  std::vector<double> rotation_error;  // alignment error per true cluster
  bool extraction_ok = false;
  std::string extraction_message;
};

// Full evaluation of a recovered matrix against the ground truth. The
// reference is M* for size-pinned variants and the normalized matrix when
// use_normalized_reference is set (unknown-size SDP).
inline RecoveryResult assess_recovery(const BlockMatrix& m, const GroundTruth& gt,
                                      bool use_normalized_reference,
                                      double tol = kDefaultExactTol) {
  const BlockMatrix& ref = use_normalized_reference ? gt.m_bar : gt.m_star;
  RecoveryResult result;
  const RecoveryError err = recovery_error(m, ref);
  result.error_log = err.log_value;
  result.error_raw = err.raw;
  result.exact = is_exact(m, ref, tol);

  const int k = 1 + *std::max_element(gt.labels.begin(), gt.labels.end());
  try {
    Extraction ex = extract_clusters_and_rotations(m, k, m.block_dim());
    result.extraction_ok = true;
    result.label_accuracy = label_accuracy(ex.labels, gt.labels, k);
    // Alignment over each true cluster; a shared offset per cluster is free.
    for (int c = 0; c < k; ++c) {
      std::vector<Rotation> est, truth;
      for (std::size_t i = 0; i < gt.labels.size(); ++i)
        if (gt.labels[i] == c) {
          est.push_back(ex.rotations[i]);
          truth.push_back(gt.rotations[i]);
        }
      if (!est.empty()) result.rotation_error.push_back(alignment_error(est, truth));
    }
    result.labels = std::move(ex.labels);
    result.rotations = std::move(ex.rotations);
  } catch (const std::exception& e) {
    result.extraction_ok = false;
    result.extraction_message = e.what();
  }
  return result;
}

}  // namespace syncluster
