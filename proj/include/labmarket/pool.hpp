#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <utility>
#include <vector>

#include "labmarket/distribution.hpp"
#include "labmarket/error.hpp"

namespace labmarket {

/// Exogenous probability that a retained worker leaves anyway.
class QuitFactor {
 public:
  explicit QuitFactor(double mu) : mu_(mu) {
    if (!(mu >= 0.0 && mu <= 1.0)) {
      throw InvalidArgument("mu must lie in [0,1]");
    }
  }
  double value() const noexcept { return mu_; }

 private:
  double mu_;
};

/// Constant multiplier over [lo, hi). The last segment of a pool is closed.
struct WeightSegment {
  double lo;
  double hi;
  double weight;
};

/// A sub-market's composition: the base density reweighted by a
/// piecewise-constant multiplier. Immutable; copies share the base.
class LaborPool {
 public:
  explicit LaborPool(const ProductivityDistribution& base)
      : LaborPool(std::make_shared<const ProductivityDistribution>(base)) {}

  explicit LaborPool(std::shared_ptr<const ProductivityDistribution> base)
      : base_(std::move(base)) {
    segments_.push_back({base_->support_low(), base_->support_high(), 1.0});
  }

  LaborPool(std::shared_ptr<const ProductivityDistribution> base,
            std::vector<WeightSegment> segments)
      : base_(std::move(base)), segments_(std::move(segments)) {
    validate();
  }

  const ProductivityDistribution& base() const noexcept { return *base_; }
  const std::shared_ptr<const ProductivityDistribution>& shared_base() const {
    return base_;
  }
  const std::vector<WeightSegment>& segments() const noexcept {
    return segments_;
  }
  double support_low() const noexcept { return base_->support_low(); }
  double support_high() const noexcept { return base_->support_high(); }

  /// Integral of theta^order * weight * N over [a, b] (or [a, b) when
  /// include_b is false).
  double moment(int order, double a, double b, bool include_b = true) const {
    double s = 0.0;
    for (std::size_t i = 0; i < segments_.size(); ++i) {
      const WeightSegment& seg = segments_[i];
      if (seg.weight == 0.0) continue;
      if (seg.lo > b) break;
      const bool last = i + 1 == segments_.size();
      const double lo = std::max(seg.lo, a);
      const double hi = std::min(seg.hi, b);
      if (hi < lo) continue;
      bool include_hi;
      if (b < seg.hi) {
        include_hi = include_b;
      } else if (last) {
        include_hi = b > seg.hi || include_b;
      } else {
        include_hi = false;  // seg.hi belongs to the next segment
      }
      if (hi == lo && !include_hi) continue;
      s += seg.weight * base_->moment(order, lo, hi, include_hi);
    }
    return s;
  }

  double moment(int order) const {
    return moment(order, support_low(), support_high());
  }

  bool empty() const { return !(moment(0) > 0.0); }

  /// Splits at t: the part below t is scaled by below_factor, the part at or
  /// above t by above_factor. t is clamped to the support.
  LaborPool rescaled(double t, double below_factor, double above_factor) const {
    t = std::clamp(t, support_low(), support_high());
    std::vector<WeightSegment> out;
    out.reserve(segments_.size() + 1);
    for (std::size_t i = 0; i < segments_.size(); ++i) {
      const WeightSegment& seg = segments_[i];
      const bool last = i + 1 == segments_.size();
      if (seg.hi <= t && !(last && seg.hi == t)) {
        out.push_back({seg.lo, seg.hi, seg.weight * below_factor});
      } else if (seg.lo >= t) {
        out.push_back({seg.lo, seg.hi, seg.weight * above_factor});
      } else {
        out.push_back({seg.lo, t, seg.weight * below_factor});
        out.push_back({t, seg.hi, seg.weight * above_factor});
      }
    }
    return LaborPool(base_, compact(std::move(out)));
  }

 private:
  // Drops empty open segments and fuses neighbours with equal weight.
  static std::vector<WeightSegment> compact(std::vector<WeightSegment> segs) {
    std::vector<WeightSegment> out;
    for (std::size_t i = 0; i < segs.size(); ++i) {
      const bool last = i + 1 == segs.size();
      if (segs[i].hi == segs[i].lo && !last) continue;
      if (!out.empty() && out.back().weight == segs[i].weight) {
        out.back().hi = segs[i].hi;
      } else {
        out.push_back(segs[i]);
      }
    }
    return out;
  }

  void validate() const {
    if (segments_.empty()) throw InvalidArgument("pool needs >= 1 segment");
    if (segments_.front().lo != support_low() ||
        segments_.back().hi != support_high()) {
      throw InvalidArgument("pool segments must cover the base support");
    }
    for (std::size_t i = 0; i < segments_.size(); ++i) {
      const WeightSegment& s = segments_[i];
      if (!(s.weight >= 0.0) || !std::isfinite(s.weight)) {
        throw InvalidArgument("pool multipliers must be finite and >= 0");
      }
      if (s.hi < s.lo) throw InvalidArgument("pool segment with hi < lo");
      if (i > 0 && segments_[i - 1].hi != s.lo) {
        throw InvalidArgument("pool segments must not overlap or leave gaps");
      }
    }
  }

  std::shared_ptr<const ProductivityDistribution> base_;
  std::vector<WeightSegment> segments_;
};

inline double pool_mass(const LaborPool& pool) { return pool.moment(0); }

inline double pool_mean(const LaborPool& pool) {
  const double m = pool.moment(0);
  if (!(m > 0.0)) throw EmptyPool("pool has zero mass");
  return std::clamp(pool.moment(1) / m, pool.support_low(),
                    pool.support_high());
}

/// Mean of the pool restricted to [a, b].
inline double truncated_mean(const LaborPool& pool, double a, double b) {
  const double m = pool.moment(0, a, b);
  if (!(m > 0.0)) throw EmptyPool("no pool mass on the truncation interval");
  return std::clamp(pool.moment(1, a, b) / m, a, b);
}

struct FiringSplit {
  LaborPool leavers;
  LaborPool stayers;
};

/// Everyone below `threshold` leaves; workers at or above it leave with
/// probability mu and stay otherwise.
inline FiringSplit firing_split(const LaborPool& pool, double threshold,
                                QuitFactor mu) {
  const double q = mu.value();
  return {pool.rescaled(threshold, 1.0, q), pool.rescaled(threshold, 0.0, 1.0 - q)};
}

/// Mean productivity of the workers leaving the pool when the retention
/// threshold is w.
inline double m_operator(const LaborPool& pool, double w, QuitFactor mu) {
  const double lo = pool.support_low();
  const double hi = pool.support_high();
  const double t = std::clamp(w, lo, hi);
  const double q = mu.value();
  const double mass = pool.moment(0, lo, t, false) + q * pool.moment(0, t, hi);
  if (!(mass > 0.0)) throw EmptyPool("no workers leave at this threshold");
  const double first = pool.moment(1, lo, t, false) + q * pool.moment(1, t, hi);
  return std::clamp(first / mass, lo, hi);
}

}  // namespace labmarket
