#include "syncluster/sdp.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "syncluster/certificate.hpp"
#include "syncluster/model.hpp"

using namespace syncluster;

namespace {

ModelParams equal_params(int n, int d, double p, double q, std::uint64_t seed) {
  return ModelParams{n, d, 2, {n / 2, n / 2}, p, q, seed};
}

BlockMatrix clean_observation(const GroundTruth& gt, const ModelParams& params) {
  return sample_observation(gt, params, params.seed);
}

}  // namespace

TEST(BuildProblem, EqualVariantRadii) {
  const SdpVariant v = SdpVariant::equal_known(5);
  EXPECT_NEAR(v.row_radius(2), 5.0 * std::sqrt(2.0), 1e-15);
  EXPECT_FALSE(v.total_radius(2).has_value());
  EXPECT_TRUE(v.pins_diagonal());
  ModelParams params = equal_params(10, 2, 1.0, 0.0, 1);
  Rng rng(1);
  const GroundTruth gt = generate_ground_truth(params, rng);
  const BlockMatrix a = clean_observation(gt, params);
  EXPECT_NO_THROW(build_problem(a, v));
  EXPECT_THROW(build_problem(a, SdpVariant::equal_known(4)), std::invalid_argument);
}

TEST(BuildProblem, UnknownAndUnequalRadii) {
  const SdpVariant unknown = SdpVariant::unknown_sizes(2);
  EXPECT_NEAR(unknown.row_radius(2), std::sqrt(2.0), 1e-15);
  EXPECT_FALSE(unknown.pins_diagonal());
  EXPECT_FALSE(unknown.total_radius(2).has_value());

  const SdpVariant unequal = SdpVariant::unequal_known(60, 40);
  EXPECT_NEAR(unequal.row_radius(2), 60.0 * std::sqrt(2.0), 1e-15);
  ASSERT_TRUE(unequal.total_radius(2).has_value());
  EXPECT_NEAR(*unequal.total_radius(2), (3600.0 + 1600.0) * std::sqrt(2.0), 1e-12);

  const SdpVariant general = SdpVariant::general_known({25, 25, 25});
  EXPECT_NEAR(general.row_radius(2), 25.0 * std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(*general.total_radius(2), 3.0 * 625.0 * std::sqrt(2.0), 1e-12);
}

TEST(FeasibilityReport, GroundTruthIsFeasible) {
  ModelParams params = equal_params(10, 2, 1.0, 0.0, 3);
  Rng rng(3);
  const GroundTruth gt = generate_ground_truth(params, rng);
  const FeasibilityGaps gaps = feasibility_report(gt.m_star, SdpVariant::equal_known(5));
  EXPECT_LT(gaps.max_gap(), 1e-10);
  // Normalized truth is feasible for the unknown-size variant.
  const FeasibilityGaps gaps2 = feasibility_report(gt.m_bar, SdpVariant::unknown_sizes(2));
  EXPECT_LT(gaps2.max_gap(), 1e-10);
}

TEST(FeasibilityReport, ScaledTruthViolatesDiagonal) {
  ModelParams params = equal_params(8, 2, 1.0, 0.0, 5);
  Rng rng(5);
  const GroundTruth gt = generate_ground_truth(params, rng);
  BlockMatrix scaled = gt.m_star;
  scaled.matrix() *= 2.0;
  const FeasibilityGaps gaps = feasibility_report(scaled, SdpVariant::equal_known(4));
  EXPECT_NEAR(gaps.diagonal, std::sqrt(2.0), 1e-12);  // ||2I - I||_F
}

TEST(FeasibilityReport, MatchesIndependentRecomputation) {
  Rng rng(7);
  BlockMatrix m(6, 2);
  for (Eigen::Index i = 0; i < m.size(); ++i)
    for (Eigen::Index j = 0; j < m.size(); ++j) m.matrix()(i, j) = rng.normal();
  m.symmetrize();
  const SdpVariant v = SdpVariant::unequal_known(3, 3);
  const FeasibilityGaps gaps = feasibility_report(m, v);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m.matrix(), Eigen::EigenvaluesOnly);
  EXPECT_NEAR(gaps.psd, std::max(0.0, -es.eigenvalues().minCoeff()), 1e-10);
  double diag = 0.0, row = 0.0, total = 0.0;
  for (int i = 0; i < 6; ++i) {
    diag = std::max(diag, (m.block(i, i) - Eigen::MatrixXd::Identity(2, 2)).norm());
    double rs = 0.0;
    for (int j = 0; j < 6; ++j) {
      rs += m.block(i, j).norm();
      total += m.block(i, j).norm();
    }
    row = std::max(row, rs - v.row_radius(2));
  }
  EXPECT_NEAR(gaps.diagonal, diag, 1e-12);
  EXPECT_NEAR(gaps.row_ball, std::max(0.0, row), 1e-12);
  EXPECT_NEAR(gaps.total_ball, std::max(0.0, total - *v.total_radius(2)), 1e-10);
}

// Clean instance: the certificate validates M* as the unique optimum, so the
// solver must land on it.
TEST(Solve, CleanInstanceRecoversGroundTruth) {
  ModelParams params = equal_params(20, 2, 1.0, 0.0, 11);
  Rng rng(11);
  const GroundTruth gt = generate_ground_truth(params, rng);
  const BlockMatrix a = clean_observation(gt, params);

  const CertifyOutcome cert = certify(a, gt, params, SdpVariant::Kind::EqualKnown, {});
  ASSERT_TRUE(cert.success);
  EXPECT_NEAR(cert.best_lambda_min, 10.0, 1e-6);  // lambda_min = m

  SolverConfig config;
  config.max_iter = 3000;
  const SolveReport report = solve(build_problem(a, SdpVariant::equal_known(10)), config);
  const double rel = (report.m.matrix() - gt.m_star.matrix()).norm() / gt.m_star.norm();
  EXPECT_LT(rel, 1e-4);
  EXPECT_LE(report.gaps.max_gap(), 10.0 * config.tol_primal);
  // Optimality consistency: never above the certified optimum by more than slack.
  const double opt = (a.matrix().cwiseProduct(gt.m_star.matrix())).sum();
  EXPECT_LE(report.objective, opt + 1e-3 * a.norm());
}

TEST(Solve, ZeroObjectiveReturnsFeasiblePoint) {
  const BlockMatrix a(8, 2);
  SolverConfig config;
  config.max_iter = 2000;
  const SolveReport report = solve(build_problem(a, SdpVariant::equal_known(4)), config);
  EXPECT_NEAR(report.objective, 0.0, 1e-9);
  EXPECT_LE(report.gaps.max_gap(), 10.0 * config.tol_primal);
}

// d = 1 with rotations fixed to 1: brute-force over the three 2+2 partitions
// of four nodes, evaluate <A, M> for each cluster-consistent M, and compare
// with the SDP solution (tight here, certified by the clean structure).
TEST(Solve, FourNodeBruteForcePartition) {
  ModelParams params{4, 1, 2, {2, 2}, 1.0, 0.0, 13};
  Rng rng(13);
  const GroundTruth gt = generate_ground_truth(params, rng);
  const BlockMatrix a = clean_observation(gt, params);

  double best_obj = -1e9;
  Eigen::MatrixXd best_m;
  const int partitions[3][4] = {{0, 0, 1, 1}, {0, 1, 0, 1}, {0, 1, 1, 0}};
  for (const auto& labels : partitions) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(4, 4);
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j)
        if (labels[i] == labels[j]) m(i, j) = 1.0;
    const double obj = (a.matrix().cwiseProduct(m)).sum();
    if (obj > best_obj) {
      best_obj = obj;
      best_m = m;
    }
  }

  SolverConfig config;
  config.max_iter = 4000;
  const SolveReport report = solve(build_problem(a, SdpVariant::equal_known(2)), config);
  EXPECT_LT((report.m.matrix() - best_m).norm() / best_m.norm(), 1e-3);
  EXPECT_NEAR(report.objective, best_obj, 1e-2);
}

TEST(Solve, SolutionIsSymmetric) {
  ModelParams params = equal_params(12, 2, 0.8, 0.2, 17);
  Rng rng(17);
  const GroundTruth gt = generate_ground_truth(params, rng);
  const BlockMatrix a = sample_observation(gt, params, 17);
  SolverConfig config;
  config.max_iter = 800;
  const SolveReport report = solve(build_problem(a, SdpVariant::equal_known(6)), config);
  EXPECT_LT((report.m.matrix() - report.m.matrix().transpose()).norm(), 1e-9);
}

TEST(Solve, ResidualTrendIsMonotoneOverWindows) {
  ModelParams params = equal_params(12, 2, 0.9, 0.4, 19);
  Rng rng(19);
  const GroundTruth gt = generate_ground_truth(params, rng);
  const BlockMatrix a = sample_observation(gt, params, 19);
  SolverConfig config;
  config.max_iter = 1200;
  config.tol_primal = config.tol_dual = 1e-12;  // force a full run
  const SolveReport report = solve(build_problem(a, SdpVariant::equal_known(6)), config);
  const auto& h = report.residual_history;
  ASSERT_GE(h.size(), 600u);
  for (std::size_t start = 0; start + 200 < h.size(); start += 200)
    EXPECT_LT(h[start + 200], h[start] * 1.05);
}

TEST(Solve, ScalingObjectiveKeepsArgmax) {
  ModelParams params = equal_params(12, 2, 1.0, 0.0, 23);
  Rng rng(23);
  const GroundTruth gt = generate_ground_truth(params, rng);
  const BlockMatrix a = clean_observation(gt, params);
  BlockMatrix a2 = a;
  a2.matrix() *= 2.0;
  SolverConfig config;
  config.max_iter = 3000;
  const SolveReport r1 = solve(build_problem(a, SdpVariant::equal_known(6)), config);
  const SolveReport r2 = solve(build_problem(a2, SdpVariant::equal_known(6)), config);
  EXPECT_LT((r1.m.matrix() - r2.m.matrix()).norm() / r1.m.norm(), 1e-3);
}

TEST(Solve, DeterministicBitForBit) {
  ModelParams params = equal_params(10, 2, 0.7, 0.3, 29);
  Rng rng(29);
  const GroundTruth gt = generate_ground_truth(params, rng);
  const BlockMatrix a = sample_observation(gt, params, 29);
  SolverConfig config;
  config.max_iter = 300;
  const SolveReport r1 = solve(build_problem(a, SdpVariant::equal_known(5)), config);
  const SolveReport r2 = solve(build_problem(a, SdpVariant::equal_known(5)), config);
  EXPECT_EQ((r1.m.matrix() - r2.m.matrix()).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(r1.objective, r2.objective);
  EXPECT_EQ(r1.iterations, r2.iterations);
}

TEST(Solve, NonConvergenceIsReportedNotThrown) {
  ModelParams params = equal_params(12, 2, 0.6, 0.5, 31);
  Rng rng(31);
  const GroundTruth gt = generate_ground_truth(params, rng);
  const BlockMatrix a = sample_observation(gt, params, 31);
  SolverConfig config;
  config.max_iter = 5;
  const SolveReport report = solve(build_problem(a, SdpVariant::equal_known(6)), config);
  EXPECT_FALSE(report.converged);
  EXPECT_EQ(report.iterations, 5);
}

TEST(Solve, UnknownVariantTraceRule) {
  ModelParams params{10, 2, 2, {5, 5}, 1.0, 0.0, 37};
  Rng rng(37);
  const GroundTruth gt = generate_ground_truth(params, rng);
  const BlockMatrix a = clean_observation(gt, params);
  SolverConfig config;
  config.max_iter = 4000;
  const SolveReport report = solve(build_problem(a, SdpVariant::unknown_sizes(2)), config);
  Eigen::MatrixXd trace = Eigen::MatrixXd::Zero(2, 2);
  for (int i = 0; i < 10; ++i) trace += report.m.block(i, i);
  EXPECT_LT((trace - 2.0 * Eigen::MatrixXd::Identity(2, 2)).norm(), 1e-4);
  // Deep in the recovery regime the normalized truth is the optimum.
  const double rel = (report.m.matrix() - gt.m_bar.matrix()).norm() / gt.m_bar.norm();
  EXPECT_LT(rel, 1e-3);
}
