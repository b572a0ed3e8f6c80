#pragma once

#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "syncluster/block_matrix.hpp"

namespace syncluster {

// The four constraint variants. All share the PSD cone and per-row group-l1
// balls; they differ in the diagonal rule (pinned blocks vs. trace) and in
// whether a total group-l1 ball is present.
struct SdpVariant {
  enum class Kind { EqualKnown, UnequalKnown, UnknownSizes, GeneralKnown };

  Kind kind;
  int K = 2;
  std::vector<int> sizes;  // empty for UnknownSizes

  static SdpVariant equal_known(int m) {
    if (m < 1) throw std::invalid_argument("SdpVariant: m must be >= 1");
    return {Kind::EqualKnown, 2, {m, m}};
  }
  static SdpVariant unequal_known(int m1, int m2) {
    if (m1 < 1 || m2 < 1) throw std::invalid_argument("SdpVariant: sizes must be >= 1");
    return {Kind::UnequalKnown, 2, {m1, m2}};
  }
  static SdpVariant unknown_sizes(int k) {
    if (k < 1) throw std::invalid_argument("SdpVariant: K must be >= 1");
    return {Kind::UnknownSizes, k, {}};
  }
  static SdpVariant general_known(std::vector<int> s) {
    if (s.empty()) throw std::invalid_argument("SdpVariant: sizes must be nonempty");
    for (int m : s)
      if (m < 1) throw std::invalid_argument("SdpVariant: sizes must be >= 1");
    return {Kind::GeneralKnown, static_cast<int>(s.size()), std::move(s)};
  }

  bool pins_diagonal() const { return kind != Kind::UnknownSizes; }

  // Row-ball radius b_i (identical for every row in all four variants).
  double row_radius(int d) const {
    const double rd = std::sqrt(static_cast<double>(d));
    switch (kind) {
      case Kind::EqualKnown:
        return sizes[0] * rd;
      case Kind::UnequalKnown:
        return std::max(sizes[0], sizes[1]) * rd;
      case Kind::UnknownSizes:
        return rd;
      case Kind::GeneralKnown: {
        int mx = 0;
        for (int m : sizes) mx = std::max(mx, m);
        return mx * rd;
      }
    }
    return rd;
  }

  std::optional<double> total_radius(int d) const {
    if (kind != Kind::UnequalKnown && kind != Kind::GeneralKnown) return std::nullopt;
    double s2 = 0.0;
    for (int m : sizes) s2 += static_cast<double>(m) * m;
    return s2 * std::sqrt(static_cast<double>(d));
  }

  // Sum of the known sizes; -1 when sizes are unknown.
  int expected_n() const {
    if (sizes.empty()) return -1;
    int s = 0;
    for (int m : sizes) s += m;
    return s;
  }

  std::string name() const {
    switch (kind) {
      case Kind::EqualKnown: return "equal";
      case Kind::UnequalKnown: return "unequal";
      case Kind::UnknownSizes: return "unknown";
      case Kind::GeneralKnown: return "general";
    }
    return "?";
  }
};

struct SolverConfig {
  double rho = 1.0;             // ADMM penalty
  int max_iter = 5000;
  double tol_primal = 1e-6;
  double tol_dual = 1e-6;
  double over_relaxation = 1.6;  // in [1, 2)

  void validate() const {
    if (rho <= 0.0 || tol_primal <= 0.0 || tol_dual <= 0.0 || max_iter < 1)
      throw std::invalid_argument("SolverConfig: penalty, tolerances, max_iter must be positive");
    if (over_relaxation < 1.0 || over_relaxation >= 2.0)
      throw std::invalid_argument("SolverConfig: over_relaxation must lie in [1, 2)");
  }
};

struct SdpProblem {
  BlockMatrix a;
  SdpVariant variant;
};

inline SdpProblem build_problem(const BlockMatrix& a, const SdpVariant& variant) {
  if (!a.is_block_symmetric(1e-9 * std::max(1.0, a.norm())))
    throw std::invalid_argument("build_problem: observation matrix must be block-symmetric");
  const int expected = variant.expected_n();
  if (expected >= 0 && expected != a.blocks())
    throw std::invalid_argument("build_problem: cluster sizes do not sum to the matrix size");
  return SdpProblem{a, variant};
}

struct FeasibilityGaps {
  double psd = 0.0;
  double diagonal = 0.0;
  double row_ball = 0.0;
  double total_ball = 0.0;

  double max_gap() const {
    return std::max(std::max(psd, diagonal), std::max(row_ball, total_ball));
  }
};

// Constraint violations of M under the given variant: (negative part of the
// smallest eigenvalue, worst diagonal/trace deviation, worst row-ball excess,
// total-ball excess).
inline FeasibilityGaps feasibility_report(const BlockMatrix& m, const SdpVariant& variant) {
  const int n = m.blocks();
  const int d = m.block_dim();
  const int expected = variant.expected_n();
  if (expected >= 0 && expected != n)
    throw std::invalid_argument("feasibility_report: dimension mismatch");
  FeasibilityGaps gaps;

  BlockMatrix sym = m;
  sym.symmetrize();
  gaps.psd = std::max(0.0, -min_eigenvalue(sym));

  if (variant.pins_diagonal()) {
    const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(d, d);
    for (int i = 0; i < n; ++i)
      gaps.diagonal = std::max(gaps.diagonal, (m.block(i, i) - id).norm());
  } else {
    Eigen::MatrixXd trace = Eigen::MatrixXd::Zero(d, d);
    for (int i = 0; i < n; ++i) trace += m.block(i, i);
    gaps.diagonal = (trace - variant.K * Eigen::MatrixXd::Identity(d, d)).norm();
  }

  const Eigen::MatrixXd norms = block_norms(m);
  const double b = variant.row_radius(d);
  for (int i = 0; i < n; ++i)
    gaps.row_ball = std::max(gaps.row_ball, norms.row(i).sum() - b);
  gaps.row_ball = std::max(gaps.row_ball, 0.0);

  if (const auto t = variant.total_radius(d))
    gaps.total_ball = std::max(0.0, norms.sum() - *t);
  return gaps;
}

struct SolveReport {
  BlockMatrix m;
  double objective = 0.0;
  int iterations = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  FeasibilityGaps gaps;
  bool converged = false;
  double wall_time_s = 0.0;
  std::vector<double> residual_history;  // max(primal, dual) per iteration
};

namespace detail {

inline void project_row_balls(Eigen::MatrixXd& v, int n, int d, double radius) {
  std::vector<double> norms(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) norms[j] = v.block(i * d, j * d, d, d).norm();
    const std::vector<double> scales = group_l1_scales(norms, radius);
    for (int j = 0; j < n; ++j)
      if (scales[j] != 1.0) v.block(i * d, j * d, d, d) *= scales[j];
  }
}

inline void project_total_ball(Eigen::MatrixXd& v, int n, int d, double radius) {
  std::vector<double> norms(n * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) norms[i * n + j] = v.block(i * d, j * d, d, d).norm();
  const std::vector<double> scales = group_l1_scales(norms, radius);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (scales[i * n + j] != 1.0) v.block(i * d, j * d, d, d) *= scales[i * n + j];
}

inline void project_affine(Eigen::MatrixXd& v, int n, int d, const SdpVariant& variant) {
  v = ((v + v.transpose()) * 0.5).eval();
  if (variant.pins_diagonal()) {
    for (int i = 0; i < n; ++i)
      v.block(i * d, i * d, d, d) = Eigen::MatrixXd::Identity(d, d);
  } else {
    Eigen::MatrixXd trace = Eigen::MatrixXd::Zero(d, d);
    for (int i = 0; i < n; ++i) trace += v.block(i * d, i * d, d, d);
    const Eigen::MatrixXd shift =
        (trace - variant.K * Eigen::MatrixXd::Identity(d, d)) / static_cast<double>(n);
    for (int i = 0; i < n; ++i) v.block(i * d, i * d, d, d) -= shift;
  }
}

inline void project_psd(Eigen::MatrixXd& v) {
  v = ((v + v.transpose()) * 0.5).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(v);
  const Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0);
  v.noalias() = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace detail

// Consensus ADMM over the intersection of the variant's constraint sets: one
// copy of M per set is projected each iteration, the consensus average picks
// up the linear objective term and is re-symmetrized, and scaled duals track
// the disagreement. Deterministic: no randomness, fixed iteration order.
inline SolveReport solve(const SdpProblem& problem, const SolverConfig& config) {
  config.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const int n = problem.a.blocks();
  const int d = problem.a.block_dim();
  const Eigen::Index nd = problem.a.size();
  const SdpVariant& variant = problem.variant;
  const double row_radius = variant.row_radius(d);
  const std::optional<double> total_radius = variant.total_radius(d);
  const int num_sets = total_radius ? 4 : 3;

  // Feasible-ish start: identity for pinned diagonals, (K/n) I for the trace rule.
  Eigen::MatrixXd z = Eigen::MatrixXd::Identity(nd, nd);
  if (!variant.pins_diagonal()) z *= static_cast<double>(variant.K) / n;

  std::vector<Eigen::MatrixXd> copies(num_sets, z);
  std::vector<Eigen::MatrixXd> duals(num_sets, Eigen::MatrixXd::Zero(nd, nd));

  const double alpha_or = config.over_relaxation;
  const double objective_step = 1.0 / (num_sets * config.rho);

  SolveReport report{BlockMatrix(n, d), 0.0, 0, 0.0, 0.0, {}, false, 0.0, {}};
  report.residual_history.reserve(config.max_iter);
  Eigen::MatrixXd best = z;
  double best_residual = std::numeric_limits<double>::infinity();

  Eigen::MatrixXd z_prev(nd, nd), accum(nd, nd), v(nd, nd);
  for (int iter = 1; iter <= config.max_iter; ++iter) {
    z_prev = z;
    double primal = 0.0;
    accum = (problem.a.matrix() * objective_step).eval();
    for (int k = 0; k < num_sets; ++k) {
      v = z - duals[k];
      switch (k) {
        case 0: detail::project_psd(v); break;
        case 1: detail::project_affine(v, n, d, variant); break;
        case 2:
          v = ((v + v.transpose()) * 0.5).eval();
          detail::project_row_balls(v, n, d, row_radius);
          break;
        case 3:
          v = ((v + v.transpose()) * 0.5).eval();
          detail::project_total_ball(v, n, d, *total_radius);
          break;
      }
      copies[k] = v;
      // Over-relaxed copy feeds the consensus average and the dual update.
      v = (alpha_or * v + (1.0 - alpha_or) * z_prev).eval();
      accum += (v + duals[k]) / num_sets;
      duals[k] += v;  // completed after the new z is known
    }
    z = ((accum + accum.transpose()) * 0.5).eval();
    for (int k = 0; k < num_sets; ++k) {
      duals[k] -= z;
      primal = std::max(primal, (copies[k] - z).norm());
    }
    const double dual = config.rho * std::sqrt(static_cast<double>(num_sets)) *
                        (z - z_prev).norm();
    const double combined = std::max(primal, dual);
    report.residual_history.push_back(combined);
    report.iterations = iter;
    report.primal_residual = primal;
    report.dual_residual = dual;
    if (combined < best_residual) {
      best_residual = combined;
      best = z;
    }
    if (primal < config.tol_primal && dual < config.tol_dual) {
      report.converged = true;
      break;
    }
  }

  report.m = BlockMatrix(n, d, best);
  report.objective = (problem.a.matrix().cwiseProduct(best)).sum();
  report.gaps = feasibility_report(report.m, variant);
  if (report.gaps.max_gap() > 10.0 * config.tol_primal) report.converged = false;
  report.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

}  // namespace syncluster
