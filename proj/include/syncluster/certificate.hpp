#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "syncluster/block_matrix.hpp"
#include "syncluster/model.hpp"
#include "syncluster/rng.hpp"
#include "syncluster/sdp.hpp"

namespace syncluster {

inline constexpr double kCertifyThreshold = 1e-9;  // lambda_min > this counts as positive

// Dual variables certifying that the ground truth is the unique SDP optimum.
// Everything is stored in the original rotation frame; the construction itself
// runs in the conjugated frame where all rotations are the identity.
struct DualCertificate {
  SdpVariant::Kind variant;
  BlockMatrix theta;
  std::vector<Eigen::MatrixXd> z_blocks;  // per-node d x d diagonal dual contribution
  std::vector<double> mu;
  std::optional<double> nu;     // unequal variant only
  std::optional<double> gamma;  // unequal / unknown variants
  BlockMatrix lambda_tilde;
  double lambda_min = 0.0;
  BlockMatrix pi;  // orthogonal projector onto the ground-truth column space

  // Lambda = (I - Pi) LambdaTilde (I - Pi).
  BlockMatrix lambda() const {
    const Eigen::Index nd = lambda_tilde.size();
    const Eigen::MatrixXd p = Eigen::MatrixXd::Identity(nd, nd) - pi.matrix();
    return BlockMatrix(lambda_tilde.blocks(), lambda_tilde.block_dim(),
                       (p * lambda_tilde.matrix() * p).eval());
  }

  // || -A - Lambda - diag(Z) + Theta + Theta^T ||_F, the KKT stationarity
  // residual with Lambda assembled through the projector identity.
  double stationarity_residual(const BlockMatrix& a) const {
    const int n = theta.blocks();
    const int d = theta.block_dim();
    Eigen::MatrixXd r = -a.matrix() - lambda().matrix() + theta.matrix() +
                        theta.matrix().transpose();
    for (int i = 0; i < n; ++i) r.block(i * d, i * d, d, d) -= z_blocks[i];
    return r.norm();
  }
};

struct CertifyOutcome {
  bool success = false;
  std::vector<double> gammas;       // empty for the gamma-free equal variant
  std::vector<double> lambda_mins;  // one entry per gamma (single entry when gamma-free)
  double best_gamma = std::numeric_limits<double>::quiet_NaN();
  double best_lambda_min = -std::numeric_limits<double>::infinity();
};

inline std::vector<double> default_gamma_grid(SdpVariant::Kind kind) {
  std::vector<double> grid;
  if (kind == SdpVariant::Kind::UnequalKnown) {
    for (int k = 0; k <= 10; ++k) grid.push_back(0.5 + 0.05 * k);
  } else if (kind == SdpVariant::Kind::UnknownSizes) {
    for (int k = 0; k <= 20; ++k) grid.push_back(0.05 * k);
  }
  return grid;
}

namespace detail {

// Smallest eigenvalue of W + diag(dvec) without materializing per-gamma
// copies: symmetric Lanczos with full reorthogonalization, deterministic
// start vector, dense fallback on non-convergence.
inline std::optional<double> lanczos_min_eigenvalue(const Eigen::MatrixXd& w,
                                                    const Eigen::VectorXd& dvec,
                                                    int max_steps = 400,
                                                    double rel_tol = 1e-10) {
  const Eigen::Index dim = w.rows();
  Rng rng(0x5eedull);
  Eigen::VectorXd v(dim);
  for (Eigen::Index i = 0; i < dim; ++i) v(i) = rng.normal();
  v.normalize();

  Eigen::MatrixXd basis(dim, max_steps);
  std::vector<double> alphas, betas;
  basis.col(0) = v;
  Eigen::VectorXd wv(dim);
  double beta = 0.0;

  for (int k = 0; k < max_steps; ++k) {
    wv.noalias() = w * basis.col(k);
    wv += dvec.cwiseProduct(basis.col(k));
    if (k > 0) wv -= beta * basis.col(k - 1);
    const double alpha = basis.col(k).dot(wv);
    alphas.push_back(alpha);
    wv -= alpha * basis.col(k);
    // Full reorthogonalization, twice for stability.
    for (int pass = 0; pass < 2; ++pass)
      wv -= basis.leftCols(k + 1) * (basis.leftCols(k + 1).transpose() * wv).eval();
    beta = wv.norm();

    const bool last = (k + 1 == max_steps) || beta < 1e-14;
    if (last || (k >= 20 && k % 10 == 0)) {
      const int m = k + 1;
      Eigen::MatrixXd tri = Eigen::MatrixXd::Zero(m, m);
      for (int i = 0; i < m; ++i) tri(i, i) = alphas[i];
      for (int i = 0; i + 1 < m; ++i) tri(i, i + 1) = tri(i + 1, i) = betas[i];
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(tri);
      const Eigen::VectorXd& ritz = es.eigenvalues();
      const double scale = std::max(std::abs(ritz(0)), std::abs(ritz(m - 1)));
      const double resid = beta * std::abs(es.eigenvectors()(m - 1, 0));
      if (resid <= rel_tol * std::max(scale, 1.0)) return ritz(0);
      if (last) return std::nullopt;
    }
    betas.push_back(beta);
    basis.col(k + 1) = wv / beta;
  }
  return std::nullopt;
}

inline double min_eig_shifted(const Eigen::MatrixXd& w, const Eigen::VectorXd& dvec) {
  if (w.rows() <= 600) {
    Eigen::MatrixXd s = w;
    s.diagonal() += dvec;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
  }
  if (const auto v = lanczos_min_eigenvalue(w, dvec)) return *v;
  Eigen::MatrixXd s = w;
  s.diagonal() += dvec;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

// Shared per-instance data in the conjugated (identity-rotation) frame.
// Cluster 1 is the larger of the two (swap-normalized).
struct TwoClusterContext {
  int n = 0, d = 0;
  double p = 0.0;
  std::vector<int> c1, c2;  // node indices
  Eigen::MatrixXd a_bar;    // conjugated observation
  Eigen::MatrixXd w;        // E[A_bar] - A_bar
  std::vector<double> x;    // per-node same-cluster degree
  double sigma1 = 0.0;      // (1/m1) sum of x over C1
  double sigma2 = 0.0;
  // Cross-cluster aggregates of A_bar.
  std::vector<Eigen::MatrixXd> row_sum_c1;  // i in C1: sum_{j in C2} A_bar_ij
  std::vector<Eigen::MatrixXd> col_sum_c2;  // j in C2: sum_{s in C1} A_bar_sj
  Eigen::MatrixXd total_cross;
  Eigen::MatrixXd alpha_norms;         // m1 x m2, || alpha_tilde_ij ||_F
  std::vector<double> rowmax, colmax;  // per-row / per-column maxima of alpha_norms
  double pairmax = 0.0;

  int m1() const { return static_cast<int>(c1.size()); }
  int m2() const { return static_cast<int>(c2.size()); }
};

inline TwoClusterContext build_context(const BlockMatrix& a, const GroundTruth& gt,
                                       const ModelParams& params) {
  const int n = a.blocks();
  const int d = a.block_dim();
  if (static_cast<int>(gt.labels.size()) != n || gt.m_star.blocks() != n ||
      gt.m_star.block_dim() != d)
    throw std::invalid_argument("certificate: observation and ground truth disagree");

  TwoClusterContext ctx;
  ctx.n = n;
  ctx.d = d;
  ctx.p = params.p;
  for (int i = 0; i < n; ++i) {
    if (gt.labels[i] == 0)
      ctx.c1.push_back(i);
    else if (gt.labels[i] == 1)
      ctx.c2.push_back(i);
    else
      throw std::invalid_argument("certificate: construction requires exactly two clusters");
  }
  if (ctx.c1.empty() || ctx.c2.empty())
    throw std::invalid_argument("certificate: both clusters must be nonempty");
  if (ctx.c2.size() > ctx.c1.size()) std::swap(ctx.c1, ctx.c2);

  // Conjugate: A_bar_ij = R_i^T A_ij R_j reduces the instance to identity
  // rotations (same-cluster edge blocks become exactly I_d up to fp error).
  ctx.a_bar.resize(n * d, n * d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      ctx.a_bar.block(i * d, j * d, d, d) = gt.rotations[i].matrix().transpose() *
                                            a.block(i, j) * gt.rotations[j].matrix();

  const double edge_threshold = 0.5 * std::sqrt(static_cast<double>(d));
  ctx.x.assign(n, 0.0);
  ctx.w = -ctx.a_bar;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j || gt.labels[i] != gt.labels[j]) continue;
      // E[A_bar] adds p I_d on same-cluster off-diagonal blocks.
      ctx.w.block(i * d, j * d, d, d).diagonal().array() += params.p;
      if (ctx.a_bar.block(i * d, j * d, d, d).norm() > edge_threshold) ctx.x[i] += 1.0;
    }
  }
  for (int i : ctx.c1) ctx.sigma1 += ctx.x[i];
  for (int i : ctx.c2) ctx.sigma2 += ctx.x[i];
  ctx.sigma1 /= ctx.m1();
  ctx.sigma2 /= ctx.m2();

  const int m1 = ctx.m1(), m2 = ctx.m2();
  ctx.row_sum_c1.assign(m1, Eigen::MatrixXd::Zero(d, d));
  ctx.col_sum_c2.assign(m2, Eigen::MatrixXd::Zero(d, d));
  for (int ii = 0; ii < m1; ++ii)
    for (int jj = 0; jj < m2; ++jj)
      ctx.row_sum_c1[ii] += ctx.a_bar.block(ctx.c1[ii] * d, ctx.c2[jj] * d, d, d);
  for (int jj = 0; jj < m2; ++jj)
    for (int ii = 0; ii < m1; ++ii)
      ctx.col_sum_c2[jj] += ctx.a_bar.block(ctx.c1[ii] * d, ctx.c2[jj] * d, d, d);
  ctx.total_cross = Eigen::MatrixXd::Zero(d, d);
  for (int jj = 0; jj < m2; ++jj) ctx.total_cross += ctx.col_sum_c2[jj];

  // alpha_tilde_ij = col_sum_j / m1 + row_sum_i / m2 - total / (m1 m2).
  ctx.alpha_norms.resize(m1, m2);
  ctx.rowmax.assign(m1, 0.0);
  ctx.colmax.assign(m2, 0.0);
  Eigen::MatrixXd at(d, d);
  for (int ii = 0; ii < m1; ++ii) {
    const Eigen::MatrixXd base = ctx.row_sum_c1[ii] / m2 - ctx.total_cross / (double(m1) * m2);
    for (int jj = 0; jj < m2; ++jj) {
      at = ctx.col_sum_c2[jj] / m1 + base;
      const double nrm = at.norm();
      ctx.alpha_norms(ii, jj) = nrm;
      ctx.rowmax[ii] = std::max(ctx.rowmax[ii], nrm);
      ctx.colmax[jj] = std::max(ctx.colmax[jj], nrm);
      ctx.pairmax = std::max(ctx.pairmax, nrm);
    }
  }
  return ctx;
}

// Per-node diagonal dual entries z_i (so that Lambda_tilde = W + p I - diag(z)).
struct DiagonalDuals {
  std::vector<double> z;
  std::vector<double> mu;
  std::optional<double> nu;
};

inline DiagonalDuals equal_duals(const TwoClusterContext& ctx) {
  const int m = ctx.m1();
  const double rd = std::sqrt(static_cast<double>(ctx.d));
  DiagonalDuals out;
  out.mu.assign(ctx.n, 0.0);
  out.z.assign(ctx.n, 0.0);
  // alpha_tilde_i = cross-row-sum / m - cluster total / (2 m^2), per side.
  for (int ii = 0; ii < m; ++ii) {
    const Eigen::MatrixXd at = ctx.row_sum_c1[ii] / m - ctx.total_cross / (2.0 * m * m);
    out.mu[ctx.c1[ii]] = at.norm();
  }
  for (int jj = 0; jj < m; ++jj) {
    const Eigen::MatrixXd at =
        ctx.col_sum_c2[jj].transpose() / m - ctx.total_cross.transpose() / (2.0 * m * m);
    out.mu[ctx.c2[jj]] = at.norm();
  }
  double s1 = 0.0, s2 = 0.0;
  for (int i : ctx.c1) s1 += out.mu[i];
  for (int i : ctx.c2) s2 += out.mu[i];
  for (int i : ctx.c1) out.z[i] = m * out.mu[i] / rd + s1 / rd - ctx.x[i];
  for (int i : ctx.c2) out.z[i] = m * out.mu[i] / rd + s2 / rd - ctx.x[i];
  return out;
}

inline DiagonalDuals unequal_duals(const TwoClusterContext& ctx, double gamma) {
  const int m1 = ctx.m1(), m2 = ctx.m2();
  const double rd = std::sqrt(static_cast<double>(ctx.d));
  DiagonalDuals out;
  out.mu.assign(ctx.n, 0.0);
  out.z.assign(ctx.n, 0.0);
  const double nu = (1.0 - gamma) * ctx.pairmax;
  out.nu = nu;
  double mu_sum_c1 = 0.0;
  for (int ii = 0; ii < m1; ++ii) {
    const double mu_i = std::max(0.0, gamma * ctx.rowmax[ii] - nu);
    out.mu[ctx.c1[ii]] = mu_i;
    mu_sum_c1 += mu_i;
  }
  for (int ii = 0; ii < m1; ++ii) {
    const int i = ctx.c1[ii];
    out.z[i] = m1 * (out.mu[i] + nu) / rd + (mu_sum_c1 + m1 * nu) / rd - ctx.x[i];
  }
  for (int j : ctx.c2) out.z[j] = 2.0 * m2 * nu / rd - ctx.x[j];
  return out;
}

inline DiagonalDuals unknown_duals(const TwoClusterContext& ctx, double gamma) {
  const int m1 = ctx.m1(), m2 = ctx.m2();
  const double rd = std::sqrt(static_cast<double>(ctx.d));
  DiagonalDuals out;
  double mu_bar_1 = -std::numeric_limits<double>::infinity();
  double mu_bar_2 = -std::numeric_limits<double>::infinity();
  for (int ii = 0; ii < m1; ++ii)
    mu_bar_1 = std::max(mu_bar_1, m1 * gamma / rd * ctx.rowmax[ii] - ctx.x[ctx.c1[ii]]);
  for (int jj = 0; jj < m2; ++jj)
    mu_bar_2 = std::max(mu_bar_2, m2 * (1.0 - gamma) / rd * ctx.colmax[jj] - ctx.x[ctx.c2[jj]]);
  mu_bar_1 = 2.0 * mu_bar_1 - ctx.sigma2;
  mu_bar_2 = 2.0 * mu_bar_2 - ctx.sigma1;
  const double mu_bar = std::max(mu_bar_1, mu_bar_2);
  const double eps = ctx.sigma1 + ctx.sigma2 + mu_bar;
  out.mu.assign(ctx.n, 0.0);
  for (int i : ctx.c1) out.mu[i] = rd / m1 * (ctx.x[i] + ctx.sigma2 / 2.0 + mu_bar / 2.0);
  for (int i : ctx.c2) out.mu[i] = rd / m2 * (ctx.x[i] + ctx.sigma1 / 2.0 + mu_bar / 2.0);
  out.z.assign(ctx.n, eps);
  return out;
}

inline Eigen::VectorXd diagonal_vector(const TwoClusterContext& ctx,
                                       const DiagonalDuals& duals) {
  Eigen::VectorXd dvec(ctx.n * ctx.d);
  for (int i = 0; i < ctx.n; ++i)
    dvec.segment(i * ctx.d, ctx.d).setConstant(ctx.p - duals.z[i]);
  return dvec;
}

}  // namespace detail

namespace detail {

// Assembles the full certificate (Theta, Lambda_tilde, ...) back in the
// original rotation frame.
inline DualCertificate assemble_certificate(const BlockMatrix& a, const GroundTruth& gt,
                                            const TwoClusterContext& ctx,
                                            const DiagonalDuals& duals,
                                            SdpVariant::Kind kind,
                                            std::optional<double> gamma) {
  const int n = ctx.n, d = ctx.d;
  const int m1 = ctx.m1(), m2 = ctx.m2();
  const double rd = std::sqrt(static_cast<double>(d));
  const double nu = duals.nu.value_or(0.0);

  DualCertificate cert{kind,
                       BlockMatrix(n, d),
                       {},
                       duals.mu,
                       duals.nu,
                       gamma,
                       BlockMatrix(n, d),
                       0.0,
                       gt.m_bar};

  // Theta: same-cluster blocks carry the row multiplier along M*, cross
  // blocks carry the alpha_tilde ansatz (split by gamma for the two-sided
  // constructions), all conjugated back by the true rotations.
  const double g = gamma.value_or(1.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (gt.labels[i] == gt.labels[j])
        cert.theta.block(i, j) = (duals.mu[i] + nu) / rd * gt.m_star.block(i, j);
  // Cross blocks.
  Eigen::MatrixXd at(d, d);
  for (int ii = 0; ii < m1; ++ii) {
    const int i = ctx.c1[ii];
    const Eigen::MatrixXd base = ctx.row_sum_c1[ii] / m2 - ctx.total_cross / (double(m1) * m2);
    for (int jj = 0; jj < m2; ++jj) {
      const int j = ctx.c2[jj];
      if (kind == SdpVariant::Kind::EqualKnown) {
        const Eigen::MatrixXd a1 =
            ctx.row_sum_c1[ii] / m1 - ctx.total_cross / (2.0 * double(m1) * m1);
        const Eigen::MatrixXd a2 = ctx.col_sum_c2[jj].transpose() / m1 -
                                   ctx.total_cross.transpose() / (2.0 * double(m1) * m1);
        cert.theta.block(i, j) =
            gt.rotations[i].matrix() * a1 * gt.rotations[j].matrix().transpose();
        cert.theta.block(j, i) =
            gt.rotations[j].matrix() * a2 * gt.rotations[i].matrix().transpose();
      } else {
        at = ctx.col_sum_c2[jj] / m1 + base;
        cert.theta.block(i, j) = g * gt.rotations[i].matrix() * at *
                                 gt.rotations[j].matrix().transpose();
        cert.theta.block(j, i) = (1.0 - g) * gt.rotations[j].matrix() * at.transpose() *
                                 gt.rotations[i].matrix().transpose();
      }
    }
  }

  // Lambda_tilde = W + p I - diag(z), conjugated back.
  Eigen::MatrixXd lt = ctx.w;
  const Eigen::VectorXd dvec = diagonal_vector(ctx, duals);
  lt.diagonal() += dvec;
  Eigen::MatrixXd lt_orig(n * d, n * d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      lt_orig.block(i * d, j * d, d, d) = gt.rotations[i].matrix() *
                                          lt.block(i * d, j * d, d, d) *
                                          gt.rotations[j].matrix().transpose();
  cert.lambda_tilde = BlockMatrix(n, d, std::move(lt_orig));

  cert.z_blocks.resize(n);
  for (int i = 0; i < n; ++i)
    cert.z_blocks[i] = duals.z[i] * Eigen::MatrixXd::Identity(d, d);

  // Spectrum is conjugation-invariant, so evaluate in the identity frame.
  cert.lambda_min = min_eig_shifted(ctx.w, dvec);
  return cert;
}

}  // namespace detail

// Lemma-form dual certificate for two equal-size clusters. General rotations
// are handled by conjugation with block-diag(R_i).
inline DualCertificate build_certificate_equal(const BlockMatrix& a, const GroundTruth& gt,
                                               const ModelParams& params) {
  detail::TwoClusterContext ctx = detail::build_context(a, gt, params);
  if (ctx.m1() != ctx.m2())
    throw std::invalid_argument("build_certificate_equal: cluster sizes are unequal");
  const detail::DiagonalDuals duals = detail::equal_duals(ctx);
  return detail::assemble_certificate(a, gt, ctx, duals, SdpVariant::Kind::EqualKnown,
                                      std::nullopt);
}

// Unequal-size construction with mixing weight gamma in [1/2, 1]; the larger
// cluster takes the role of C1 (swap-normalized internally).
inline DualCertificate build_certificate_unequal(const BlockMatrix& a, const GroundTruth& gt,
                                                 const ModelParams& params, double gamma) {
  if (gamma < 0.5 || gamma > 1.0)
    throw std::invalid_argument("build_certificate_unequal: gamma must lie in [1/2, 1]");
  detail::TwoClusterContext ctx = detail::build_context(a, gt, params);
  if (ctx.m1() == ctx.m2())
    throw std::invalid_argument(
        "build_certificate_unequal: sizes are equal; use the equal-size certificate");
  const detail::DiagonalDuals duals = detail::unequal_duals(ctx, gamma);
  return detail::assemble_certificate(a, gt, ctx, duals, SdpVariant::Kind::UnequalKnown, gamma);
}

// Unknown-size construction (normalized ground truth), gamma in [0, 1].
inline DualCertificate build_certificate_unknown(const BlockMatrix& a, const GroundTruth& gt,
                                                 const ModelParams& params, double gamma) {
  if (gamma < 0.0 || gamma > 1.0)
    throw std::invalid_argument("build_certificate_unknown: gamma must lie in [0, 1]");
  detail::TwoClusterContext ctx = detail::build_context(a, gt, params);
  const detail::DiagonalDuals duals = detail::unknown_duals(ctx, gamma);
  return detail::assemble_certificate(a, gt, ctx, duals, SdpVariant::Kind::UnknownSizes, gamma);
}

// Evaluates lambda_min(Lambda_tilde) across a gamma grid without materializing
// full certificates. Success means some grid point is positive definite
// (lambda_min above the eigensolver-accuracy threshold).
inline CertifyOutcome certify(const BlockMatrix& a, const GroundTruth& gt,
                              const ModelParams& params, SdpVariant::Kind kind,
                              const std::vector<double>& gamma_grid) {
  if (kind == SdpVariant::Kind::GeneralKnown)
    throw std::invalid_argument("certify: no dual construction exists for the general variant");
  detail::TwoClusterContext ctx = detail::build_context(a, gt, params);

  // Equal sizes under the unequal variant fall back to the gamma-free
  // equal-size construction.
  SdpVariant::Kind effective = kind;
  if (kind == SdpVariant::Kind::UnequalKnown && ctx.m1() == ctx.m2())
    effective = SdpVariant::Kind::EqualKnown;
  if (kind == SdpVariant::Kind::EqualKnown && ctx.m1() != ctx.m2())
    throw std::invalid_argument("certify: equal variant requires equal cluster sizes");

  CertifyOutcome outcome;
  if (effective == SdpVariant::Kind::EqualKnown) {
    const detail::DiagonalDuals duals = detail::equal_duals(ctx);
    const double lm = detail::min_eig_shifted(ctx.w, detail::diagonal_vector(ctx, duals));
    outcome.lambda_mins.push_back(lm);
    outcome.best_lambda_min = lm;
  } else {
    if (gamma_grid.empty())
      throw std::invalid_argument("certify: gamma grid must be nonempty for this variant");
    const bool unequal = effective == SdpVariant::Kind::UnequalKnown;
    for (double g : gamma_grid) {
      if (unequal && (g < 0.5 || g > 1.0))
        throw std::invalid_argument("certify: gamma outside [1/2, 1]");
      if (!unequal && (g < 0.0 || g > 1.0))
        throw std::invalid_argument("certify: gamma outside [0, 1]");
      const detail::DiagonalDuals duals =
          unequal ? detail::unequal_duals(ctx, g) : detail::unknown_duals(ctx, g);
      const double lm = detail::min_eig_shifted(ctx.w, detail::diagonal_vector(ctx, duals));
      outcome.gammas.push_back(g);
      outcome.lambda_mins.push_back(lm);
      if (lm > outcome.best_lambda_min) {
        outcome.best_lambda_min = lm;
        outcome.best_gamma = g;
      }
    }
  }
  outcome.success = outcome.best_lambda_min > kCertifyThreshold;
  return outcome;
}

}  // namespace syncluster
