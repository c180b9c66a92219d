#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace labmarket {

enum class Relation { less, equal, greater };

inline const char* to_string(Relation r) {
  switch (r) {
    case Relation::less: return "less";
    case Relation::equal: return "equal";
    case Relation::greater: return "greater";
  }
  return "?";
}

/// One claimed inequality `lhs < rhs`, evaluated on numbers.
struct Comparison {
  std::string lhs_name;
  std::string rhs_name;
  double lhs = 0.0;
  double rhs = 0.0;
  Relation relation = Relation::equal;

  bool strict() const { return relation == Relation::less; }
  bool weak() const { return relation != Relation::greater; }
};

inline Comparison compare_less(std::string lhs_name, double lhs,
                               std::string rhs_name, double rhs,
                               double tol = 1e-9) {
  Comparison c{std::move(lhs_name), std::move(rhs_name), lhs, rhs,
               Relation::equal};
  const double scale = std::max({1.0, std::abs(lhs), std::abs(rhs)});
  if (std::abs(lhs - rhs) <= tol * scale) {
    c.relation = Relation::equal;
  } else {
    c.relation = lhs < rhs ? Relation::less : Relation::greater;
  }
  return c;
}

/// A suite of claimed inequalities plus informational ones that are reported
/// but do not count toward the verdict.
struct InequalityReport {
  std::vector<Comparison> claims;
  std::vector<Comparison> informational;

  bool holds_strictly() const {
    return std::all_of(claims.begin(), claims.end(),
                       [](const Comparison& c) { return c.strict(); });
  }
  bool holds_weakly() const {
    return std::all_of(claims.begin(), claims.end(),
                       [](const Comparison& c) { return c.weak(); });
  }
};

}  // namespace labmarket
