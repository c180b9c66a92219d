#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "labmarket/error.hpp"
#include "labmarket/format.hpp"
#include "labmarket/quadrature.hpp"

namespace labmarket {

enum class DistributionKind { uniform, discrete, piecewise_linear };

/// A mass point: `count` workers of productivity `theta`.
struct Atom {
  double theta;
  double count;
};

/// Breakpoint of a piecewise-linear head-count density.
struct DensityPoint {
  double theta;
  double density;
};

/// Quadrature tolerance for continuous densities without closed forms.
inline constexpr double kQuadratureTolerance = 1e-10;

/// Entry-level head-count density N(theta) on [support_low, support_high].
///
/// Integrals are taken over half-open intervals [lo, hi) unless include_hi is
/// set; the distinction only matters for discrete atoms sitting exactly on a
/// boundary.
class ProductivityDistribution {
 public:
  static ProductivityDistribution uniform(double low, double high,
                                          double density = 1.0) {
    if (!std::isfinite(low) || !std::isfinite(high) || !(low < high)) {
      throw InvalidArgument("uniform distribution needs finite low < high");
    }
    if (!std::isfinite(density) || !(density > 0.0)) {
      throw InvalidArgument("uniform density must be positive and finite");
    }
    ProductivityDistribution d;
    d.kind_ = DistributionKind::uniform;
    d.low_ = low;
    d.high_ = high;
    d.uniform_density_ = density;
    return d;
  }

  static ProductivityDistribution discrete(std::vector<Atom> atoms) {
    if (atoms.empty()) {
      throw InvalidArgument("discrete distribution needs at least one atom");
    }
    for (const Atom& a : atoms) {
      if (!std::isfinite(a.theta) || !std::isfinite(a.count) || a.count < 0.0) {
        throw InvalidArgument("discrete atoms need finite theta and count >= 0");
      }
    }
    std::sort(atoms.begin(), atoms.end(),
              [](const Atom& a, const Atom& b) { return a.theta < b.theta; });
    std::vector<Atom> merged;
    for (const Atom& a : atoms) {
      if (!merged.empty() && merged.back().theta == a.theta) {
        merged.back().count += a.count;
      } else {
        merged.push_back(a);
      }
    }
    ProductivityDistribution d;
    d.kind_ = DistributionKind::discrete;
    d.atoms_ = std::move(merged);
    d.low_ = d.atoms_.front().theta;
    d.high_ = d.atoms_.back().theta;
    d.check_mass();
    return d;
  }

  static ProductivityDistribution piecewise_linear(
      std::vector<DensityPoint> points) {
    if (points.size() < 2) {
      throw InvalidArgument("piecewise-linear density needs >= 2 breakpoints");
    }
    for (std::size_t i = 0; i < points.size(); ++i) {
      const auto& p = points[i];
      if (!std::isfinite(p.theta) || !std::isfinite(p.density) ||
          p.density < 0.0) {
        throw InvalidArgument(
            "piecewise-linear breakpoints need finite theta and density >= 0");
      }
      if (i > 0 && !(points[i - 1].theta < p.theta)) {
        throw InvalidArgument(
            "piecewise-linear breakpoints must be strictly increasing");
      }
    }
    ProductivityDistribution d;
    d.kind_ = DistributionKind::piecewise_linear;
    d.points_ = std::move(points);
    d.low_ = d.points_.front().theta;
    d.high_ = d.points_.back().theta;
    d.check_mass();
    return d;
  }

  DistributionKind kind() const noexcept { return kind_; }
  double support_low() const noexcept { return low_; }
  double support_high() const noexcept { return high_; }
  bool continuous() const noexcept { return kind_ != DistributionKind::discrete; }

  /// True when every worker has the same productivity.
  bool degenerate() const {
    if (kind_ != DistributionKind::discrete) return false;
    int positive = 0;
    for (const Atom& a : atoms_) positive += a.count > 0.0;
    return positive == 1;
  }

  const std::vector<Atom>& atoms() const noexcept { return atoms_; }
  const std::vector<DensityPoint>& points() const noexcept { return points_; }
  double uniform_density() const noexcept { return uniform_density_; }

  double total_mass() const { return moment(0, low_, high_, true); }
  double mean() const { return moment(1, low_, high_, true) / total_mass(); }

  /// N(theta) for continuous kinds; zero outside the support.
  double density(double theta) const {
    if (theta < low_ || theta > high_) return 0.0;
    switch (kind_) {
      case DistributionKind::uniform:
        return uniform_density_;
      case DistributionKind::piecewise_linear: {
        auto it = std::upper_bound(
            points_.begin(), points_.end(), theta,
            [](double t, const DensityPoint& p) { return t < p.theta; });
        if (it == points_.end()) return points_.back().density;
        if (it == points_.begin()) return points_.front().density;
        const DensityPoint& r = *it;
        const DensityPoint& l = *(it - 1);
        const double s = (theta - l.theta) / (r.theta - l.theta);
        return l.density + s * (r.density - l.density);
      }
      case DistributionKind::discrete:
        break;
    }
    throw InvalidArgument("density() is undefined for discrete distributions");
  }

  /// Integral of theta^order * N(theta) over [lo, hi) (or [lo, hi]).
  /// order is 0, 1 or 2.
  double moment(int order, double lo, double hi, bool include_hi) const {
    if (order < 0 || order > 2) throw InvalidArgument("moment order must be 0..2");
    switch (kind_) {
      case DistributionKind::uniform: {
        const double a = std::max(lo, low_);
        const double b = std::min(hi, high_);
        if (!(b > a)) return 0.0;
        const double w = b - a;
        if (order == 0) return uniform_density_ * w;
        if (order == 1) return uniform_density_ * w * (0.5 * (a + b));
        return uniform_density_ * w * (a * a + a * b + b * b) / 3.0;
      }
      case DistributionKind::discrete: {
        double s = 0.0;
        for (const Atom& at : atoms_) {
          if (at.theta < lo) continue;
          if (at.theta > hi || (at.theta == hi && !include_hi)) break;
          s += at.count * std::pow(at.theta, order);
        }
        return s;
      }
      case DistributionKind::piecewise_linear:
        return quadrature_moment(order, lo, hi);
    }
    return 0.0;
  }

  /// Adaptive-Simpson moment for continuous kinds. Density breakpoints are
  /// always panel boundaries.
  double quadrature_moment(int order, double lo, double hi,
                           double tol = kQuadratureTolerance) const {
    if (!continuous()) {
      throw InvalidArgument("quadrature_moment needs a continuous density");
    }
    const double a = std::max(lo, low_);
    const double b = std::min(hi, high_);
    if (!(b > a)) return 0.0;
    std::vector<double> cuts{a};
    for (const DensityPoint& p : points_) {
      if (p.theta > a && p.theta < b) cuts.push_back(p.theta);
    }
    cuts.push_back(b);
    auto f = [&](double t) {
      const double d = density(t);
      return order == 0 ? d : order == 1 ? t * d : t * t * d;
    };
    double s = 0.0;
    const double panel_tol = tol / static_cast<double>(cuts.size() - 1);
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
      s += adaptive_simpson(f, cuts[i], cuts[i + 1], panel_tol);
    }
    return s;
  }

  /// Inverse CDF of the normalized head count; u in [0, 1).
  double quantile(double u) const {
    u = std::clamp(u, 0.0, 1.0);
    switch (kind_) {
      case DistributionKind::uniform:
        return low_ + u * (high_ - low_);
      case DistributionKind::discrete: {
        const double target = u * total_mass();
        double cum = 0.0;
        for (const Atom& a : atoms_) {
          cum += a.count;
          if (target < cum) return a.theta;
        }
        for (auto it = atoms_.rbegin(); it != atoms_.rend(); ++it) {
          if (it->count > 0.0) return it->theta;
        }
        return atoms_.back().theta;
      }
      case DistributionKind::piecewise_linear: {
        double target = u * total_mass();
        for (std::size_t i = 0; i + 1 < points_.size(); ++i) {
          const DensityPoint& l = points_[i];
          const DensityPoint& r = points_[i + 1];
          const double width = r.theta - l.theta;
          const double piece = 0.5 * (l.density + r.density) * width;
          if (target < piece || i + 2 == points_.size()) {
            const double slope = (r.density - l.density) / width;
            // Solve l.density*y + slope*y^2/2 = target for y in [0, width].
            const double disc =
                std::max(0.0, l.density * l.density + 2.0 * slope * target);
            const double denom = l.density + std::sqrt(disc);
            const double y = denom > 0.0 ? 2.0 * target / denom : 0.0;
            return l.theta + std::clamp(y, 0.0, width);
          }
          target -= piece;
        }
        return high_;
      }
    }
    return low_;
  }

  /// Config-format literal, e.g. `uniform(0,1)`.
  std::string describe() const {
    std::string s;
    switch (kind_) {
      case DistributionKind::uniform:
        s = "uniform(" + format_real(low_) + "," + format_real(high_);
        if (uniform_density_ != 1.0) s += "," + format_real(uniform_density_);
        return s + ")";
      case DistributionKind::discrete:
        s = "discrete(";
        for (std::size_t i = 0; i < atoms_.size(); ++i) {
          if (i) s += ";";
          s += "(" + format_real(atoms_[i].theta) + "," +
               format_real(atoms_[i].count) + ")";
        }
        return s + ")";
      case DistributionKind::piecewise_linear:
        s = "pwl(";
        for (std::size_t i = 0; i < points_.size(); ++i) {
          if (i) s += ";";
          s += "(" + format_real(points_[i].theta) + "," +
               format_real(points_[i].density) + ")";
        }
        return s + ")";
    }
    return s;
  }

 private:
  ProductivityDistribution() = default;

  void check_mass() const {
    const double m = total_mass();
    if (!std::isfinite(m) || !(m > 0.0)) {
      throw InvalidArgument("distribution needs finite, strictly positive mass");
    }
  }

  DistributionKind kind_ = DistributionKind::uniform;
  double low_ = 0.0;
  double high_ = 1.0;
  double uniform_density_ = 1.0;
  std::vector<Atom> atoms_;
  std::vector<DensityPoint> points_;
};

}  // namespace labmarket
