#include "syncluster/block_matrix.hpp"

#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>

#include "syncluster/rng.hpp"
#include "test_util.hpp"

using namespace syncluster;

namespace {

BlockMatrix random_symmetric(int n, int d, Rng& rng) {
  BlockMatrix m(n, d);
  for (Eigen::Index i = 0; i < m.size(); ++i)
    for (Eigen::Index j = 0; j < m.size(); ++j) m.matrix()(i, j) = rng.normal();
  m.symmetrize();
  return m;
}

}  // namespace

TEST(BlockNorms, IdentityGivesSqrtDOnDiagonal) {
  const BlockMatrix m = BlockMatrix::identity(4, 3);
  const Eigen::MatrixXd norms = block_norms(m);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      EXPECT_DOUBLE_EQ(norms(i, j), i == j ? std::sqrt(3.0) : 0.0);
}

TEST(BlockNorms, AllOnesClusterGivesSqrtDEverywhere) {
  // One cluster with identity rotations: every block is I_d.
  const int n = 3, d = 2;
  BlockMatrix m(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m.block(i, j) = Eigen::MatrixXd::Identity(d, d);
  const Eigen::MatrixXd norms = block_norms(m);
  EXPECT_TRUE((norms.array() - std::sqrt(2.0)).abs().maxCoeff() < 1e-15);
}

TEST(BlockNorms, MatchesDirectResummation) {
  Rng rng(3);
  BlockMatrix m(5, 2);
  for (Eigen::Index i = 0; i < m.size(); ++i)
    for (Eigen::Index j = 0; j < m.size(); ++j) m.matrix()(i, j) = rng.normal();
  const Eigen::MatrixXd norms = block_norms(m);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) {
      double s = 0.0;
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) s += m.matrix()(i * 2 + a, j * 2 + b) * m.matrix()(i * 2 + a, j * 2 + b);
      EXPECT_NEAR(norms(i, j), std::sqrt(s), 1e-14);
    }
}

TEST(BlockNorms, SymmetricInputGivesSymmetricNorms) {
  Rng rng(5);
  const BlockMatrix m = random_symmetric(6, 2, rng);
  const Eigen::MatrixXd norms = block_norms(m);
  EXPECT_EQ((norms - norms.transpose()).cwiseAbs().maxCoeff(), 0.0);
}

TEST(MinEigenvalue, HandValues) {
  BlockMatrix m(3, 1);
  m.matrix() = Eigen::Vector3d(3.0, -1.0, 2.0).asDiagonal();
  EXPECT_NEAR(min_eigenvalue(m), -1.0, 1e-14);
  EXPECT_NEAR(min_eigenvalue(BlockMatrix::identity(4, 2)), 1.0, 1e-14);
}

TEST(MinEigenvalue, MatchesJacobiSweepOracle) {
  Rng rng(7);
  const BlockMatrix m = random_symmetric(4, 2, rng);  // 8 x 8
  const std::vector<double> ev = oracle::jacobi_eigenvalues(m.matrix());
  EXPECT_NEAR(min_eigenvalue(m), ev.front(), 1e-8);
}

TEST(MinEigenvalue, RejectsAsymmetric) {
  BlockMatrix m(2, 1);
  m.matrix() << 0.0, 1.0, 0.0, 0.0;
  EXPECT_THROW(min_eigenvalue(m), std::invalid_argument);
}

TEST(PsdProject, FixesNegativePart) {
  BlockMatrix m(2, 1);
  m.matrix() = Eigen::Vector2d(1.0, -1.0).asDiagonal();
  const BlockMatrix p = psd_project(m);
  Eigen::MatrixXd expected = Eigen::Vector2d(1.0, 0.0).asDiagonal();
  EXPECT_LT((p.matrix() - expected).norm(), 1e-14);
}

TEST(PsdProject, IdempotentAndKeepsPsdInputs) {
  Rng rng(11);
  BlockMatrix m = random_symmetric(3, 2, rng);
  m.matrix() = (m.matrix() * m.matrix().transpose()).eval();  // PSD
  m.symmetrize();
  const BlockMatrix p = psd_project(m);
  EXPECT_LT((p.matrix() - m.matrix()).norm(), 1e-10);
  const BlockMatrix pp = psd_project(p);
  EXPECT_LT((pp.matrix() - p.matrix()).norm(), 1e-9);
}

TEST(PsdProject, ResultHasNonnegativeSpectrum) {
  Rng rng(13);
  for (int t = 0; t < 10; ++t) {
    const BlockMatrix m = random_symmetric(4, 2, rng);
    EXPECT_GE(min_eigenvalue(psd_project(m)), -1e-9);
  }
}

// Nearest-PSD property: the projection beats 10^4 random PSD candidates.
TEST(PsdProject, MonteCarloDominance) {
  Rng rng(17);
  const BlockMatrix s = random_symmetric(3, 2, rng);  // 6 x 6
  const BlockMatrix p = psd_project(s);
  const double dist = (s.matrix() - p.matrix()).norm();
  for (int t = 0; t < 10000; ++t) {
    Eigen::MatrixXd g(6, 6);
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 6; ++j) g(i, j) = rng.normal();
    const Eigen::MatrixXd candidate = g * g.transpose();
    EXPECT_LE(dist, (s.matrix() - candidate).norm() + 1e-12);
  }
}

TEST(GroupL1Project, FeasibleInputUnchanged) {
  std::vector<Eigen::MatrixXd> blocks{Eigen::MatrixXd::Identity(2, 2) * 0.3,
                                      Eigen::MatrixXd::Identity(2, 2) * 0.1};
  const auto out = group_l1_project(blocks, 10.0);
  for (std::size_t i = 0; i < blocks.size(); ++i)
    EXPECT_EQ((out[i] - blocks[i]).norm(), 0.0);
}

TEST(GroupL1Project, SingleBlockRadialProjection) {
  Eigen::MatrixXd b(1, 1);
  b << 2.0;
  const auto out = group_l1_project({b}, 1.0);
  EXPECT_NEAR(out[0](0, 0), 1.0, 1e-14);
}

TEST(GroupL1Project, TwoScalarBlocksKkt) {
  Eigen::MatrixXd b1(1, 1), b2(1, 1);
  b1 << 3.0;
  b2 << 1.0;
  const auto out = group_l1_project({b1, b2}, 2.0);
  EXPECT_NEAR(out[0](0, 0), 2.0, 1e-14);  // lambda = 1
  EXPECT_NEAR(out[1](0, 0), 0.0, 1e-14);
}

TEST(GroupL1Project, RejectsNegativeRadius) {
  EXPECT_THROW(group_l1_project({Eigen::MatrixXd::Identity(2, 2)}, -1.0),
               std::invalid_argument);
}

// Oracle equivalence on random cases: the projected norm vector must match
// the bisection-KKT solve of the l1-ball projection.
TEST(GroupL1Project, MatchesBisectionOracle) {
  Rng rng(19);
  for (int t = 0; t < 100; ++t) {
    const int k = 1 + static_cast<int>(rng.next_u64() % 8);
    std::vector<Eigen::MatrixXd> blocks;
    std::vector<double> norms;
    for (int j = 0; j < k; ++j) {
      Eigen::MatrixXd b(2, 2);
      for (int a = 0; a < 2; ++a)
        for (int c = 0; c < 2; ++c) b(a, c) = rng.normal();
      blocks.push_back(b);
      norms.push_back(b.norm());
    }
    const double radius = 0.5 + 2.0 * rng.uniform();
    const auto projected = group_l1_project(blocks, radius);
    const auto expected = oracle::l1_ball_projection_bisection(norms, radius);
    for (int j = 0; j < k; ++j) EXPECT_NEAR(projected[j].norm(), expected[j], 1e-8);
  }
}

TEST(GroupL1Project, OutputFeasibleAndFixedPoint) {
  Rng rng(23);
  for (int t = 0; t < 50; ++t) {
    std::vector<Eigen::MatrixXd> blocks;
    for (int j = 0; j < 6; ++j) {
      Eigen::MatrixXd b(2, 2);
      for (int a = 0; a < 2; ++a)
        for (int c = 0; c < 2; ++c) b(a, c) = rng.normal();
      blocks.push_back(b);
    }
    const double radius = 2.0 * rng.uniform();
    const auto out = group_l1_project(blocks, radius);
    double total = 0.0;
    for (const auto& b : out) total += b.norm();
    EXPECT_LE(total, radius + 1e-10 * std::max(radius, 1.0));
    const auto again = group_l1_project(out, radius);
    for (std::size_t j = 0; j < out.size(); ++j)
      EXPECT_LT((again[j] - out[j]).norm(), 1e-10);
  }
}

TEST(Jcdb, RoundTripsBitExactly) {
  Rng rng(29);
  BlockMatrix m(3, 2);
  for (Eigen::Index i = 0; i < m.size(); ++i)
    for (Eigen::Index j = 0; j < m.size(); ++j) m.matrix()(i, j) = rng.normal();
  const std::string path =
      (std::filesystem::temp_directory_path() / "syncluster_jcdb_test.jcdb").string();
  write_jcdb(path, m);
  const BlockMatrix back = read_jcdb(path);
  EXPECT_EQ(back.blocks(), 3);
  EXPECT_EQ(back.block_dim(), 2);
  EXPECT_EQ((back.matrix() - m.matrix()).cwiseAbs().maxCoeff(), 0.0);
  std::filesystem::remove(path);
}

TEST(Jcdb, RejectsBadMagic) {
  const std::string path =
      (std::filesystem::temp_directory_path() / "syncluster_jcdb_bad.jcdb").string();
  {
    std::ofstream out(path, std::ios::binary);
    out << "NOTJCDB";
  }
  EXPECT_THROW(read_jcdb(path), std::runtime_error);
  std::filesystem::remove(path);
}
