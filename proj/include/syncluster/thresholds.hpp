#pragma once

#include <cmath>
#include <stdexcept>

namespace syncluster {

// Parameters of the logarithmic-degree regime: p = alpha ln(n)/n,
// q = beta ln(n)/n, larger-cluster fraction rho = m1/n.
struct RegimeParams {
  double alpha = 0.0;
  double beta = 0.0;
  double rho = 0.5;
  int d = 2;

  int ell() const { return d == 2 ? 1 : 2; }
};

// f(tau) = alpha - tau * ln(e * alpha / tau), strictly decreasing on (0, alpha]
// with f(alpha) = 0 and limit alpha as tau -> 0+.
inline double f_alpha_tau(double alpha, double tau) {
  if (!(tau > 0.0) || tau > alpha)
    throw std::domain_error("f_alpha_tau: tau must lie in (0, alpha]");
  return alpha - tau * (1.0 + std::log(alpha / tau));
}

inline double f_alpha_limit_at_zero(double alpha) { return alpha; }

// Unique root of f(tau) = target in (0, alpha), by bisection. The bracket
// [1e-15 * alpha, alpha] stays clear of the log singularity at zero.
inline double solve_tau_star(double alpha, double target) {
  if (!(target > 0.0) || target >= alpha)
    throw std::domain_error("solve_tau_star: target must lie in (0, alpha)");
  double lo = 1e-15 * alpha;
  double hi = alpha;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (f_alpha_tau(alpha, mid) > target)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

// Equal-size two-cluster recovery condition:
// f(sqrt(2*ell*beta)) > 2, with the beta = 0 boundary taken as the tau -> 0
// limit (alpha > 2).
inline bool condition_equal(const RegimeParams& rp) {
  if (rp.beta < 0.0) throw std::domain_error("condition_equal: beta must be >= 0");
  if (rp.beta == 0.0) return rp.alpha > 2.0;
  const double tau = std::sqrt(2.0 * rp.ell() * rp.beta);
  if (tau >= rp.alpha) return false;
  return f_alpha_tau(rp.alpha, tau) > 2.0;
}

// Unequal-size condition (rho in (1/2, 1)): alpha > 1/(1-rho); for beta > 0
// additionally tau1*/delta2 > 1 and tau1*/delta1 > max(1 - tau2*/(2 delta2), 1/2)
// with f(tau1*) = 1/rho, f(tau2*) = 1/(1-rho).
inline bool condition_unequal(const RegimeParams& rp) {
  if (!(rp.rho > 0.5) || !(rp.rho < 1.0))
    throw std::domain_error("condition_unequal: rho must lie in (1/2, 1)");
  if (rp.beta < 0.0) throw std::domain_error("condition_unequal: beta must be >= 0");
  if (!(rp.alpha > 1.0 / (1.0 - rp.rho))) return false;
  if (rp.beta == 0.0) return true;
  const double tau1 = solve_tau_star(rp.alpha, 1.0 / rp.rho);
  const double tau2 = solve_tau_star(rp.alpha, 1.0 / (1.0 - rp.rho));
  const double root_lb = std::sqrt(rp.ell() * rp.beta);
  const double delta1 = (2.0 / std::sqrt(rp.rho) + 1.0 / std::sqrt(1.0 - rp.rho)) * root_lb;
  const double delta2 = (1.0 / std::sqrt(rp.rho) + 1.0 / std::sqrt(1.0 - rp.rho)) * root_lb;
  if (!(tau1 / delta2 > 1.0)) return false;
  return tau1 / delta1 > std::max(1.0 - tau2 / (2.0 * delta2), 0.5);
}

// Unknown-size condition (rho in (0, 1)):
// max(1/rho, 1/(1-rho)) < alpha <= min(2 tau1*, 2 tau2*,
//   tau1* + tau2* - (1/sqrt(rho) + 1/sqrt(1-rho)) sqrt(ell beta)).
inline bool condition_unknown(const RegimeParams& rp) {
  if (!(rp.rho > 0.0) || !(rp.rho < 1.0))
    throw std::domain_error("condition_unknown: rho must lie in (0, 1)");
  if (rp.beta < 0.0) throw std::domain_error("condition_unknown: beta must be >= 0");
  const double lower = std::max(1.0 / rp.rho, 1.0 / (1.0 - rp.rho));
  if (!(rp.alpha > lower)) return false;
  const double tau1 = solve_tau_star(rp.alpha, 1.0 / rp.rho);
  const double tau2 = solve_tau_star(rp.alpha, 1.0 / (1.0 - rp.rho));
  const double gap = (1.0 / std::sqrt(rp.rho) + 1.0 / std::sqrt(1.0 - rp.rho)) *
                     std::sqrt(rp.ell() * rp.beta);
  const double upper = std::min(std::min(2.0 * tau1, 2.0 * tau2), tau1 + tau2 - gap);
  return rp.alpha <= upper;
}

// Binomial lower-tail exponent rho * f(alpha, tau): P{X <= tau rho ln n} decays
// like n^{-rho f} for X ~ Binom(rho n, alpha ln(n)/n).
inline double lemma_a1_exponent(double alpha, double tau, double rho) {
  return rho * f_alpha_tau(alpha, tau);
}

enum class ThresholdKind { Equal, Unequal, Unknown };

// Largest beta at which the chosen condition still holds for a given alpha
// (0 when it already fails at beta = 0). All conditions are monotone in beta,
// so bisection applies.
inline double boundary_beta(ThresholdKind kind, double alpha, double rho, int d) {
  const auto holds = [&](double beta) {
    RegimeParams rp{alpha, beta, rho, d};
    switch (kind) {
      case ThresholdKind::Equal:
        return condition_equal(rp);
      case ThresholdKind::Unequal:
        return condition_unequal(rp);
      case ThresholdKind::Unknown:
        return condition_unknown(rp);
    }
    return false;
  };
  if (!holds(0.0)) return 0.0;
  double lo = 0.0, hi = 1.0;
  while (holds(hi) && hi < 1e6) hi *= 2.0;
  for (int it = 0; it < 100; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (holds(mid))
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace syncluster
