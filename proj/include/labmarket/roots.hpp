#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "labmarket/error.hpp"

namespace labmarket {

struct SolverOptions {
  double tol = 1e-10;        ///< residual tolerance at an accepted root
  int max_iter = 200;        ///< bisection steps per bracket
  int scan_points = 1024;    ///< grid intervals when scanning for brackets
};

struct RootScan {
  std::vector<double> roots;            ///< ascending
  std::vector<double> discontinuities;  ///< sign changes that are jumps
  double best_abs_residual = std::numeric_limits<double>::infinity();
};

/// Bisects a sign change of g on [lo, hi] down to adjacent doubles. g may
/// return nullopt where it is undefined; such a midpoint ends the search.
/// Throws NoConvergence if max_iter steps do not close the bracket.
template <class G>
double bisect(const G& g, double lo, double hi, double glo,
              const SolverOptions& opts) {
  for (int it = 0; it < opts.max_iter; ++it) {
    const double mid = lo + 0.5 * (hi - lo);
    if (!(mid > lo && mid < hi)) {
      return lo;
    }
    const std::optional<double> gm = g(mid);
    if (!gm) return mid;
    if (*gm == 0.0) return mid;
    if ((*gm < 0.0) == (glo < 0.0)) {
      lo = mid;
      glo = *gm;
    } else {
      hi = mid;
    }
  }
  const double mid = lo + 0.5 * (hi - lo);
  if (!(mid > lo && mid < hi)) return lo;
  throw NoConvergence("bisection budget exhausted",
                      {std::abs(hi - lo)});
}

/// Scans [lo, hi] on opts.scan_points intervals, bisects every sign change of
/// g, and keeps the candidates whose residual is within opts.tol.
template <class G>
RootScan scan_roots(const G& g, double lo, double hi,
                    const SolverOptions& opts) {
  RootScan out;
  auto note = [&](double r) {
    out.best_abs_residual = std::min(out.best_abs_residual, std::abs(r));
  };
  auto accept = [&](double x) {
    if (out.roots.empty() || x != out.roots.back()) out.roots.push_back(x);
  };
  if (!(hi > lo)) {
    const auto v = g(lo);
    if (v) {
      note(*v);
      if (std::abs(*v) <= opts.tol) out.roots.push_back(lo);
    }
    return out;
  }
  const int n = std::max(1, opts.scan_points);
  std::optional<double> prev;
  double prev_x = lo;
  for (int k = 0; k <= n; ++k) {
    const double x = k == n ? hi : lo + (hi - lo) * (static_cast<double>(k) / n);
    const std::optional<double> v = g(x);
    if (v) {
      note(*v);
      if (prev && (*prev < 0.0) != (*v < 0.0) && *prev != 0.0 && *v != 0.0) {
        const double r = bisect(g, prev_x, x, *prev, opts);
        const auto gr = g(r);
        // Bisection lands on either side of the crossing; take the better end.
        double best = r;
        double best_res = gr ? std::abs(*gr) : std::numeric_limits<double>::infinity();
        const double r_next = std::nextafter(r, hi);
        if (const auto gn = g(r_next); gn && std::abs(*gn) < best_res) {
          best = r_next;
          best_res = std::abs(*gn);
        }
        note(best_res);
        if (best_res <= opts.tol) {
          accept(best);
        } else {
          out.discontinuities.push_back(best);
        }
      }
      if (std::abs(*v) <= opts.tol &&
          (*v == 0.0 || k == 0 || k == n)) {
        accept(x);
      }
      prev = v;
      prev_x = x;
    } else {
      prev.reset();
    }
  }
  return out;
}

}  // namespace labmarket
