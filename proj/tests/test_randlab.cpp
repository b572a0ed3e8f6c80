#include "syncluster/randlab.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "syncluster/thresholds.hpp"

using namespace syncluster;
using namespace syncluster::randlab;

TEST(RotationSumStatistic, DegenerateCases) {
  Rng rng(1);
  EXPECT_EQ(rotation_sum_statistic(10, 0.0, 2, rng), 0.0);
  EXPECT_NEAR(rotation_sum_statistic(1, 1.0, 2, rng), 1.0, 1e-12);
  EXPECT_NEAR(rotation_sum_statistic(1, 1.0, 3, rng), 1.0, 1e-12);
}

// E[statistic^2] = qm: the squared Frobenius norm over d concentrates at the
// number of present terms.
TEST(RotationSumStatistic, SecondMomentMatchesTheory) {
  const int m = 500, trials = 1000;
  double sum = 0.0, sumsq = 0.0;
  for (int t = 0; t < trials; ++t) {
    Rng rng(mix_seed(42, t));
    const double s = rotation_sum_statistic(m, 1.0, 2, rng);
    sum += s * s;
    sumsq += s * s * s * s;
  }
  const double mean = sum / trials;
  const double var = sumsq / trials - mean * mean;
  const double se = std::sqrt(var / trials);
  EXPECT_NEAR(mean, 500.0, 3.0 * se + 1e-9);
}

TEST(BernsteinBound, SpotValueRecomputedIndependently) {
  const int m = 500, n = 500, d = 2;
  const double q = 1.0, c = 1.0;
  // Independent recomputation of the display.
  const double level = c * std::log((double)n) + std::log(2.0 * d);
  const double expected = std::sqrt(2.0 * q * m * level) *
                          (std::sqrt(1.0 + level / (18.0 * q * m)) +
                           std::sqrt(level / (18.0 * q * m)));
  EXPECT_NEAR(bernstein_bound(m, q, d, c, n), expected, 1e-12);
  // c -> 0 keeps only the log(2d) level.
  const double level0 = std::log(2.0 * d);
  const double expected0 = std::sqrt(2.0 * q * m * level0) *
                           (std::sqrt(1.0 + level0 / (18.0 * q * m)) +
                            std::sqrt(level0 / (18.0 * q * m)));
  EXPECT_NEAR(bernstein_bound(m, q, d, 0.0, n), expected0, 1e-12);
}

TEST(BernsteinBound, LogRegimeApproximation) {
  // m = rho n, q = beta ln(n)/n: bound is about sqrt(2 c rho beta) ln n.
  const int n = 100000;
  const double rho = 0.5, beta = 2.0, c = 1.0;
  const int m = static_cast<int>(rho * n);
  const double q = beta * std::log((double)n) / n;
  const double bound = bernstein_bound(m, q, 2, c, n);
  const double approx = std::sqrt(2.0 * c * rho * beta) * std::log((double)n);
  EXPECT_NEAR(bound / approx, 1.0, 0.1);
}

TEST(SharpD2Bound, ArithmeticAndDegenerate) {
  EXPECT_NEAR(sharp_d2_bound(500, 1.0, 1.0, 500), std::sqrt(500.0 * std::log(500.0)), 1e-10);
  EXPECT_NEAR(sharp_d2_bound(500, 1.0, 1.0, 500), 55.74, 0.01);
  EXPECT_EQ(sharp_d2_bound(500, 0.0, 1.0, 500), 0.0);
}

TEST(SharpD2Bound, SqrtTwoBelowBernstein) {
  // For d = 2 and large m the matrix-Bernstein level is sqrt(2) above the
  // sharp bound, which is what separates ell = 1 from ell = 2.
  const int m = 200000, n = m;
  const double ratio = sharp_d2_bound(m, 1.0, 1.0, n) / bernstein_bound(m, 1.0, 2, 1.0, n);
  EXPECT_NEAR(ratio, 1.0 / std::sqrt(2.0), 0.03);
}

TEST(BlockOpnormStatistic, DegenerateCases) {
  Rng rng(3);
  EXPECT_EQ(block_opnorm_statistic(4, 5, 0.0, 2, rng), 0.0);
  EXPECT_NEAR(block_opnorm_statistic(1, 1, 1.0, 2, rng), 1.0, 1e-12);
  EXPECT_NEAR(block_opnorm_statistic(1, 1, 1.0, 3, rng), 1.0, 1e-12);
}

TEST(BlockOpnormStatistic, SqrtMScaling) {
  // Doubling m1 = m2 should scale the median by sqrt(2) within 10%.
  auto median_opnorm = [](int m, std::uint64_t seed) {
    std::vector<double> vals;
    for (int t = 0; t < 21; ++t) {
      Rng rng(mix_seed(seed, t));
      vals.push_back(block_opnorm_statistic(m, m, 0.1, 2, rng));
    }
    std::sort(vals.begin(), vals.end());
    return vals[10];
  };
  const double m100 = median_opnorm(100, 5);
  const double m200 = median_opnorm(200, 6);
  EXPECT_NEAR(m200 / m100, std::sqrt(2.0), 0.1 * std::sqrt(2.0));
}

TEST(MinDegreeStatistic, DeterministicEndpoints) {
  Rng rng(7);
  EXPECT_EQ(min_degree_statistic(50, 1.0, rng), 49);
  EXPECT_EQ(min_degree_statistic(50, 0.0, rng), 0);
}

// Lemma A.1 rate check. The bare exponent n^{-rho f} carries a polynomial
// prefactor at finite n; with the integer-corrected tau and the Stirling
// factor 1/sqrt(2 pi k) folded in, the union-bound prediction
// m * n^{-rho f(tau_eff)} / sqrt(2 pi k) tracks the empirical rate within a
// factor 3 at tau = 2. At tau = 1 the event is too rare to bound from below,
// so only the upper tracking is asserted.
TEST(MinDegreeStatistic, TailRateTracksLemmaExponent) {
  const int m = 300, n = 600, trials = 30000;
  const double alpha = 8.0;
  const double p = alpha * std::log((double)n) / n;
  const double rho = static_cast<double>(m) / n;
  const double logn = std::log((double)n);

  for (double tau : {1.0, 2.0}) {
    const int k = static_cast<int>(std::floor(tau * rho * logn));
    const double tau_eff = k / (rho * logn);
    const double exponent = lemma_a1_exponent(alpha, tau_eff, rho);
    const double predicted =
        m * std::exp(-exponent * logn) / std::sqrt(2.0 * M_PI * k);

    int hits = 0;
    for (int t = 0; t < trials; ++t) {
      Rng rng(mix_seed(0xDE6, static_cast<std::uint64_t>(tau * 100), t));
      if (min_degree_statistic(m, p, rng) <= k) ++hits;
    }
    const double rate = static_cast<double>(hits) / trials;
    EXPECT_LE(rate, 3.0 * predicted + 3.0 / trials) << "tau=" << tau;
    if (tau == 2.0) EXPECT_GE(rate, predicted / 3.0) << "tau=" << tau;
  }
}

TEST(TailReport, DegenerateBounds) {
  auto stat = [](Rng& rng) { return rotation_sum_statistic(50, 0.5, 2, rng); };
  const TailReport huge = tail_report(stat, 1e12, 100, 11);
  EXPECT_EQ(huge.violation_fraction, 0.0);
  const TailReport zero = tail_report(stat, 0.0, 100, 11);
  EXPECT_EQ(zero.violation_fraction, 1.0);
  EXPECT_EQ(zero.trials, 100);
  EXPECT_EQ(zero.samples.size(), 100u);
}

TEST(TailReport, SeedReproducible) {
  auto stat = [](Rng& rng) { return rotation_sum_statistic(50, 0.5, 2, rng); };
  const TailReport a = tail_report(stat, 5.0, 200, 13);
  const TailReport b = tail_report(stat, 5.0, 200, 13);
  EXPECT_EQ(a.samples, b.samples);
}

// Sharpness ordering for d = 2: the empirical 99th percentile sits between
// the sharp bound calibrated to the 1% tail and the Bernstein level.
TEST(TailReport, SharpnessOrderingAtOnePercentTail) {
  const int m = 500, n = 500, trials = 1000;
  auto stat = [&](Rng& rng) { return rotation_sum_statistic(m, 1.0, 2, rng); };
  const TailReport report = tail_report(stat, 0.0, trials, 17);
  std::vector<double> samples = report.samples;
  std::sort(samples.begin(), samples.end());
  const double p99 = samples[static_cast<std::size_t>(0.99 * trials)];
  const double c = std::log(100.0) / std::log((double)n);  // n^{-c} = 1%
  EXPECT_GT(p99, sharp_d2_bound(m, 1.0, c, n) * 0.8);
  EXPECT_LT(p99, bernstein_bound(m, 1.0, 2, c, n));
}
