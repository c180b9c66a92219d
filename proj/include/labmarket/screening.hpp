#pragma once

#include <algorithm>
#include <cmath>

#include "labmarket/error.hpp"

namespace labmarket {

/// How a revealed slice that straddles the market average is treated.
enum class StraddlePolicy {
  fire_below_average_part,  ///< fire the revealed workers below the average
  keep_whole_slice,         ///< fire whole slices only
};

struct ScreeningConfig {
  int n_total = 1;    ///< periods needed to reveal productivity fully
  int m_allowed = 1;  ///< periods the firm may observe and fire
  double theta_low = 0.0;
  double theta_high = 1.0;
  StraddlePolicy policy = StraddlePolicy::fire_below_average_part;

  void validate() const {
    if (n_total < 1) throw InvalidArgument("n_total must be >= 1");
    if (m_allowed < 0) throw InvalidArgument("m_allowed must be >= 0");
    if (!(theta_low < theta_high)) {
      throw InvalidArgument("theta_low must be below theta_high");
    }
  }
};

struct Interval {
  double lo;
  double hi;
};

/// Productivity slice the firm can certify at period t (0-based).
inline Interval distinguishable_interval(int t, const ScreeningConfig& cfg) {
  cfg.validate();
  if (t < 0 || t >= cfg.n_total) {
    throw OutOfRange("period must lie in [0, n_total)");
  }
  const double span = cfg.theta_high - cfg.theta_low;
  const double n = cfg.n_total;
  return {cfg.theta_low + (t / n) * span, cfg.theta_low + ((t + 1) / n) * span};
}

/// Fraction of [theta_low, theta_high] fired after m periods of slice-by-slice
/// screening against the fixed entry average.
inline double fired_fraction(const ScreeningConfig& cfg) {
  cfg.validate();
  const int periods = std::min(cfg.m_allowed, cfg.n_total);
  if (cfg.policy == StraddlePolicy::fire_below_average_part) {
    return std::min(static_cast<double>(periods) / cfg.n_total, 0.5);
  }
  // Slice t is fired only if it lies wholly below the midpoint: 2(t+1) <= n.
  const int whole = std::min(periods, cfg.n_total / 2);
  return static_cast<double>(whole) / cfg.n_total;
}

/// Probability that a worker who survives screening is below the entry
/// average (theta_low + theta_high) / 2.
inline double residual_below_average_probability(const ScreeningConfig& cfg) {
  const double fired = fired_fraction(cfg);
  const double below = std::max(0.0, 0.5 - fired);
  return below / (1.0 - fired);
}

/// Largest n for which m screening periods clear every below-average worker.
inline int critical_assessment_periods(int m_allowed) {
  if (m_allowed < 1) throw InvalidArgument("m_allowed must be >= 1");
  return 2 * m_allowed;
}

}  // namespace labmarket
