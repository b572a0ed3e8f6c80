#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "syncluster/block_matrix.hpp"
#include "syncluster/rng.hpp"
#include "syncluster/rotations.hpp"

namespace syncluster {

// Model configuration: n nodes in K clusters of the given sizes, within- and
// cross-cluster edge probabilities p and q, rotation dimension d.
struct ModelParams {
  int n = 0;
  int d = 0;
  int K = 0;
  std::vector<int> sizes;
  double p = 0.0;
  double q = 0.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (n < 1 || d < 1 || K < 1) throw std::invalid_argument("ModelParams: n, d, K must be >= 1");
    if (static_cast<int>(sizes.size()) != K)
      throw std::invalid_argument("ModelParams: sizes must have K entries");
    for (int m : sizes)
      if (m < 1) throw std::invalid_argument("ModelParams: all cluster sizes must be >= 1");
    if (std::accumulate(sizes.begin(), sizes.end(), 0) != n)
      throw std::invalid_argument("ModelParams: cluster sizes must sum to n");
    if (p < 0.0 || p > 1.0 || q < 0.0 || q > 1.0)
      throw std::invalid_argument("ModelParams: probabilities must lie in [0, 1]");
  }
};

// p = alpha ln(n)/n, q = beta ln(n)/n (natural logarithm), clamped to [0, 1].
inline double rate_to_probability(double rate, int n) {
  const double v = rate * std::log(static_cast<double>(n)) / static_cast<double>(n);
  return std::min(1.0, std::max(0.0, v));
}

// Ground truth of one instance: labels (cluster-contiguous), rotations, the
// clean matrix M* with blocks R_i R_j^T on same-cluster pairs, and the
// normalized variant with each cluster's blocks divided by its size.
struct GroundTruth {
  std::vector<int> labels;
  std::vector<Rotation> rotations;
  BlockMatrix m_star;
  BlockMatrix m_bar;

  int cluster_of(int i) const { return labels[i]; }
};

inline GroundTruth generate_ground_truth(const ModelParams& params, Rng& rng) {
  params.validate();
  std::vector<int> labels(params.n);
  int node = 0;
  for (int k = 0; k < params.K; ++k)
    for (int c = 0; c < params.sizes[k]; ++c) labels[node++] = k;

  std::vector<Rotation> rotations;
  rotations.reserve(params.n);
  for (int i = 0; i < params.n; ++i) rotations.push_back(sample_haar(params.d, rng));

  BlockMatrix m_star(params.n, params.d);
  BlockMatrix m_bar(params.n, params.d);
  for (int i = 0; i < params.n; ++i) {
    for (int j = 0; j < params.n; ++j) {
      if (labels[i] != labels[j]) continue;
      const Eigen::MatrixXd blk =
          rotations[i].matrix() * rotations[j].matrix().transpose();
      m_star.block(i, j) = blk;
      m_bar.block(i, j) = blk / static_cast<double>(params.sizes[labels[i]]);
    }
  }
  return GroundTruth{std::move(labels), std::move(rotations), std::move(m_star), std::move(m_bar)};
}

// One observation draw. Per-pair streams are derived from (seed, i, j) so the
// result is independent of traversal order: for i < j, with probability p a
// same-cluster pair contributes R_i R_j^T, with probability q a cross-cluster
// pair contributes a fresh Haar rotation, otherwise the block is zero. The
// (j, i) block mirrors the transpose and diagonal blocks stay zero.
inline BlockMatrix sample_observation(const GroundTruth& gt, const ModelParams& params,
                                      std::uint64_t seed) {
  params.validate();
  BlockMatrix a(params.n, params.d);
  for (int i = 0; i < params.n; ++i) {
    for (int j = i + 1; j < params.n; ++j) {
      Rng pair_rng(mix_seed(seed, i, j));
      const bool same = gt.cluster_of(i) == gt.cluster_of(j);
      if (!pair_rng.bernoulli(same ? params.p : params.q)) continue;
      if (same) {
        a.block(i, j) = gt.m_star.block(i, j);
      } else {
        a.block(i, j) = sample_haar(params.d, pair_rng).matrix();
      }
      a.block(j, i) = a.block(i, j).transpose().eval();
    }
  }
  return a;
}

// E[A] = p * M* - p * I. Cross-cluster blocks have Haar mean zero and the
// diagonal blocks are exactly zero by the A_ii = 0 convention.
inline BlockMatrix expected_observation(const GroundTruth& gt, const ModelParams& params) {
  params.validate();
  BlockMatrix e(params.n, params.d);
  e.matrix() = params.p * gt.m_star.matrix();
  for (int i = 0; i < params.n; ++i) e.block(i, i).setZero();
  return e;
}

// Applies a node permutation (new index -> old index) to a ground truth and
// matching observation. Tests use this to avoid exploiting the contiguous
// cluster ordering.
inline void permute_nodes(const std::vector<int>& perm, GroundTruth& gt, BlockMatrix& a) {
  const int n = static_cast<int>(perm.size());
  const int d = gt.m_star.block_dim();
  GroundTruth out{std::vector<int>(n), {}, BlockMatrix(n, d), BlockMatrix(n, d)};
  out.rotations.reserve(n);
  for (int i = 0; i < n; ++i) {
    out.labels[i] = gt.labels[perm[i]];
    out.rotations.push_back(gt.rotations[perm[i]]);
  }
  BlockMatrix pa(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      out.m_star.block(i, j) = gt.m_star.block(perm[i], perm[j]);
      out.m_bar.block(i, j) = gt.m_bar.block(perm[i], perm[j]);
      pa.block(i, j) = a.block(perm[i], perm[j]);
    }
  gt = std::move(out);
  a = std::move(pa);
}

}  // namespace syncluster
