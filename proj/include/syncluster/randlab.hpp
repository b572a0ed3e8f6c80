#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

#include "syncluster/rng.hpp"
#include "syncluster/rotations.hpp"

namespace syncluster {
namespace randlab {

// Finite-n slack multiplier applied to asymptotic bounds when testing them.
inline constexpr double kDefaultSlack = 1.1;

// ||sum_{i=1}^m X_i||_F / sqrt(d) for X_i = Haar rotation with probability q,
// zero otherwise.
inline double rotation_sum_statistic(int m, double q, int d, Rng& rng) {
  if (m < 1) throw std::invalid_argument("rotation_sum_statistic: m must be >= 1");
  Eigen::MatrixXd z = Eigen::MatrixXd::Zero(d, d);
  for (int i = 0; i < m; ++i)
    if (rng.bernoulli(q)) z += sample_haar(d, rng).matrix();
  return z.norm() / std::sqrt(static_cast<double>(d));
}

// Matrix-Bernstein tail level for the statistic above at confidence n^{-c}:
// sqrt(2qm(c ln n + ln 2d)) * (sqrt(1 + L/(18qm)) + sqrt(L/(18qm))).
inline double bernstein_bound(int m, double q, int d, double c, int n) {
  if (m < 1 || n < 2 || q < 0.0 || c < 0.0)
    throw std::invalid_argument("bernstein_bound: bad arguments");
  if (q == 0.0) return 0.0;
  const double level = c * std::log(static_cast<double>(n)) + std::log(2.0 * d);
  const double qm = q * m;
  const double ratio = level / (18.0 * qm);
  return std::sqrt(2.0 * qm * level) * (std::sqrt(1.0 + ratio) + std::sqrt(ratio));
}

// Sharp d = 2 tail level sqrt(c q m ln n); the asymptotic o(1) slack is left
// to the caller as an explicit multiplier (kDefaultSlack in the harnesses).
inline double sharp_d2_bound(int m, double q, double c, int n) {
  if (m < 1 || n < 2 || q < 0.0 || c < 0.0)
    throw std::invalid_argument("sharp_d2_bound: bad arguments");
  return std::sqrt(c * q * m * std::log(static_cast<double>(n)));
}

// Operator norm of an m1 x m2 block matrix whose d x d blocks are independent
// Haar rotations present with probability q.
inline double block_opnorm_statistic(int m1, int m2, double q, int d, Rng& rng) {
  if (m1 < 1 || m2 < 1)
    throw std::invalid_argument("block_opnorm_statistic: block counts must be >= 1");
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(m1 * d, m2 * d);
  for (int i = 0; i < m1; ++i)
    for (int j = 0; j < m2; ++j)
      if (rng.bernoulli(q)) s.block(i * d, j * d, d, d) = sample_haar(d, rng).matrix();
  // Largest singular value via the Gram matrix on the smaller side.
  if (m1 * d <= m2 * d) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es((s * s.transpose()).eval(),
                                                      Eigen::EigenvaluesOnly);
    return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es((s.transpose() * s).eval(),
                                                    Eigen::EigenvaluesOnly);
  return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

// Minimum degree of an Erdos-Renyi graph on m nodes with edge probability p
// (node degrees are Binom(m-1, p), coupled through the shared edges).
inline int min_degree_statistic(int m, double p, Rng& rng) {
  if (m < 2) throw std::invalid_argument("min_degree_statistic: m must be >= 2");
  std::vector<int> degree(m, 0);
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j)
      if (rng.bernoulli(p)) {
        degree[i]++;
        degree[j]++;
      }
  int mn = degree[0];
  for (int i = 1; i < m; ++i) mn = std::min(mn, degree[i]);
  return mn;
}

struct TailReport {
  int trials = 0;
  std::vector<double> samples;
  double bound = 0.0;
  double violation_fraction = 0.0;
  double predicted_rate = 0.0;
};

// Runs `trials` independent draws of a statistic (per-trial streams derived
// from the seed, so aggregation is order-free) and records how often the
// bound is exceeded.
inline TailReport tail_report(const std::function<double(Rng&)>& statistic, double bound,
                              int trials, std::uint64_t seed, double predicted_rate = 0.0) {
  if (trials < 1) throw std::invalid_argument("tail_report: trials must be >= 1");
  TailReport report;
  report.trials = trials;
  report.bound = bound;
  report.predicted_rate = predicted_rate;
  report.samples.reserve(trials);
  int violations = 0;
  for (int t = 0; t < trials; ++t) {
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(t)));
    const double s = statistic(rng);
    report.samples.push_back(s);
    if (s > bound) ++violations;
  }
  report.violation_fraction = static_cast<double>(violations) / trials;
  return report;
}

}  // namespace randlab
}  // namespace syncluster
