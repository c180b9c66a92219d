#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "labmarket/comparison.hpp"
#include "labmarket/distribution.hpp"
#include "labmarket/error.hpp"
#include "labmarket/pool.hpp"
#include "labmarket/roots.hpp"

namespace labmarket {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct OnePeriodResult {
  double wage = 0.0;
  bool collapsed = false;
};

/// Pooling wage with no firing option: the entry mean, or collapse when it is
/// negative.
inline OnePeriodResult one_period_wage(const ProductivityDistribution& dist) {
  const double mean = dist.mean();
  if (mean < 0.0) return {0.0, true};
  return {mean, false};
}

/// Equilibrium of a market fed by the leavers of `pool`.
struct FixedPointResult {
  double wage = 0.0;  ///< 0 when collapsed
  bool collapsed = false;
  double residual = kNaN;  ///< wage - M(wage)
  std::vector<double> roots;
  std::vector<double> discontinuities;
};

namespace detail {

inline std::optional<double> fixed_point_gap(const LaborPool& pool, double w,
                                             QuitFactor mu) {
  const double t = std::clamp(w, pool.support_low(), pool.support_high());
  const double q = mu.value();
  const double lo = pool.support_low();
  const double hi = pool.support_high();
  const double mass = pool.moment(0, lo, t, false) + q * pool.moment(0, t, hi);
  if (!(mass > 0.0)) return std::nullopt;
  const double first = pool.moment(1, lo, t, false) + q * pool.moment(1, t, hi);
  return w - first / mass;
}

}  // namespace detail

/// Solves w = M(w) for the leavers of `pool` by scanning
/// [min(theta_L, 0), pool mean] and bisecting each sign change. The largest
/// root is the equilibrium; all roots are kept for diagnostics. A root with a
/// negative wage, or with no leavers, collapses the market (wage reported 0).
inline FixedPointResult market_fixed_point(const LaborPool& pool, QuitFactor mu,
                                           const SolverOptions& opts = {}) {
  const double mean = pool_mean(pool);
  const double lo = std::min(pool.support_low(), 0.0);
  auto g = [&](double w) { return detail::fixed_point_gap(pool, w, mu); };
  RootScan scan = scan_roots(g, lo, mean, opts);

  FixedPointResult out;
  out.roots = scan.roots;
  out.discontinuities = scan.discontinuities;
  if (scan.roots.empty()) {
    out.collapsed = true;
    return out;
  }
  const double w = scan.roots.back();
  const auto gap = g(w);
  if (w < 0.0 || !gap) {
    out.collapsed = true;
    return out;
  }
  out.wage = w;
  out.residual = *gap;
  return out;
}

inline FixedPointResult secondhand_fixed_point(
    const ProductivityDistribution& dist, QuitFactor mu,
    const SolverOptions& opts = {}) {
  return market_fixed_point(LaborPool(dist), mu, opts);
}

/// Tatonnement w <- (1 - damping) w + damping M(w). Independent of the
/// bracketing solver; used to cross-check it.
inline double tatonnement(const LaborPool& pool, QuitFactor mu,
                          double damping = 0.5,
                          std::optional<double> start = std::nullopt,
                          double tol = 1e-14, int max_iter = 100000) {
  double w = start ? *start : pool_mean(pool);
  for (int it = 0; it < max_iter; ++it) {
    const double next = (1.0 - damping) * w + damping * m_operator(pool, w, mu);
    if (std::abs(next - w) <= tol) return next;
    w = next;
  }
  throw NoConvergence("tatonnement did not settle");
}

/// Entry wage from the two-period zero-profit condition
/// N (theta_bar - w0) + Q (theta_bar2 - w1) = 0.
inline double entry_wage_two_period(const ProductivityDistribution& dist,
                                    QuitFactor mu, double w1) {
  const LaborPool pool(dist);
  const double n = pool_mass(pool);
  const double theta_bar = pool_mean(pool);
  const double top = dist.support_high();
  const double above = pool.moment(0, w1, top);
  if (!(above > 0.0)) throw EmptyPool("no worker lies above the second-hand wage");
  const double q = (1.0 - mu.value()) * above;
  const double theta_bar2 = truncated_mean(pool, w1, top);
  return theta_bar + q / n * (theta_bar2 - w1);
}

struct TwoPeriodSolution {
  double mu = 0.0;
  double w0 = 0.0;          ///< entry wage
  double w1 = 0.0;          ///< second-hand wage
  double theta_bar = 0.0;   ///< entry pool mean
  double theta_bar2 = kNaN; ///< mean of workers kept after period 1
  double n_mass = 0.0;
  double q_mass = 0.0;
  double residual_fixed_point = kNaN;
  double residual_zero_profit = 0.0;
  bool collapsed = false;        ///< second-hand market collapsed
  bool entry_collapsed = false;  ///< entry wage negative: no hiring at all
  std::vector<double> roots;
};

inline TwoPeriodSolution solve_two_period(const ProductivityDistribution& dist,
                                          QuitFactor mu,
                                          const SolverOptions& opts = {}) {
  const LaborPool pool(dist);
  const FixedPointResult fp = market_fixed_point(pool, mu, opts);

  TwoPeriodSolution s;
  s.mu = mu.value();
  s.w1 = fp.wage;
  s.collapsed = fp.collapsed;
  s.residual_fixed_point = fp.residual;
  s.roots = fp.roots;
  s.n_mass = pool_mass(pool);
  s.theta_bar = pool_mean(pool);

  const double top = dist.support_high();
  const double above = pool.moment(0, s.w1, top);
  if (above > 0.0) {
    s.theta_bar2 = truncated_mean(pool, s.w1, top);
    s.q_mass = (1.0 - mu.value()) * above;
  }
  s.w0 = s.q_mass > 0.0
             ? s.theta_bar + s.q_mass / s.n_mass * (s.theta_bar2 - s.w1)
             : s.theta_bar;
  s.residual_zero_profit =
      s.n_mass * (s.theta_bar - s.w0) +
      (s.q_mass > 0.0 ? s.q_mass * (s.theta_bar2 - s.w1) : 0.0);
  s.entry_collapsed = s.w0 < 0.0;
  return s;
}

/// Evaluates w1 < theta_bar < w0 < theta_bar2 link by link.
inline InequalityReport check_two_period_ordering(const TwoPeriodSolution& sol,
                                                  double tol = 1e-9) {
  if (sol.collapsed) {
    throw InvalidArgument("ordering is only defined for a non-collapsed market");
  }
  InequalityReport r;
  r.claims.push_back(compare_less("w1", sol.w1, "theta_bar", sol.theta_bar, tol));
  r.claims.push_back(compare_less("theta_bar", sol.theta_bar, "w0", sol.w0, tol));
  r.claims.push_back(compare_less("w0", sol.w0, "theta_bar2", sol.theta_bar2, tol));
  return r;
}

}  // namespace labmarket
