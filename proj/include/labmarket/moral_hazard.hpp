#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "labmarket/error.hpp"
#include "labmarket/format.hpp"

namespace labmarket {

enum class UtilityFamily { linear, sqrt, log1p, crra };

/// u(s) for the agent's wage, or G(net) for the principal's net output.
/// crra(g) is ((1+s)^(1-g) - 1) / (1-g), shifted so u(0) = 0.
struct Utility {
  UtilityFamily family = UtilityFamily::linear;
  double gamma = 0.0;

  static Utility linear() { return {UtilityFamily::linear, 0.0}; }
  static Utility square_root() { return {UtilityFamily::sqrt, 0.0}; }
  static Utility log_one_plus() { return {UtilityFamily::log1p, 0.0}; }
  static Utility crra(double g) {
    if (!(g > 0.0) || !std::isfinite(g)) {
      throw InvalidArgument("crra needs a positive finite gamma");
    }
    return {UtilityFamily::crra, g};
  }

  double operator()(double s) const {
    constexpr double kNegInf = -std::numeric_limits<double>::infinity();
    switch (family) {
      case UtilityFamily::linear:
        return s;
      case UtilityFamily::sqrt:
        return s >= 0.0 ? std::sqrt(s) : kNegInf;
      case UtilityFamily::log1p:
        return s > -1.0 ? std::log1p(s) : kNegInf;
      case UtilityFamily::crra:
        if (!(s > -1.0)) return kNegInf;
        if (gamma == 1.0) return std::log1p(s);
        return (std::pow(1.0 + s, 1.0 - gamma) - 1.0) / (1.0 - gamma);
    }
    return kNegInf;
  }

  std::string describe() const {
    switch (family) {
      case UtilityFamily::linear: return "linear";
      case UtilityFamily::sqrt: return "sqrt";
      case UtilityFamily::log1p: return "log1p";
      case UtilityFamily::crra: return "crra(" + format_real(gamma) + ")";
    }
    return "?";
  }
};

/// lo + (hi - lo) * k / (levels - 1), k = 0..levels-1.
inline std::vector<double> make_wage_grid(double lo, double hi, int levels) {
  if (levels < 2) throw InvalidArgument("wage grid needs >= 2 levels");
  if (!(hi > lo)) throw InvalidArgument("wage grid needs hi > lo");
  std::vector<double> g(static_cast<std::size_t>(levels));
  for (int k = 0; k < levels; ++k) {
    g[static_cast<std::size_t>(k)] = k == levels - 1 ? hi : lo + (hi - lo) * k / (levels - 1);
  }
  return g;
}

struct ContractProblem {
  std::vector<double> outcomes;
  std::vector<double> effort_costs;          ///< c(a), one per effort
  std::vector<std::vector<double>> density;  ///< density[a][x]
  Utility agent_utility = Utility::square_root();
  Utility principal_utility = Utility::linear();
  double reservation = 0.0;
  std::vector<double> wage_grid;

  std::size_t outcome_count() const { return outcomes.size(); }
  std::size_t effort_count() const { return effort_costs.size(); }

  void validate() const {
    if (outcomes.empty()) throw InvalidArgument("no outcomes");
    if (effort_costs.empty()) throw InvalidArgument("no effort levels");
    if (wage_grid.size() < 2) throw InvalidArgument("wage grid needs >= 2 levels");
    if (density.size() != effort_costs.size()) {
      throw InvalidArgument("need one outcome density per effort level");
    }
    for (std::size_t i = 1; i < outcomes.size(); ++i) {
      if (!(outcomes[i] > outcomes[i - 1])) {
        throw InvalidArgument("outcomes must be strictly increasing");
      }
    }
    for (std::size_t a = 0; a < density.size(); ++a) {
      if (density[a].size() != outcomes.size()) {
        throw InvalidArgument("density row size differs from outcome count");
      }
      double s = 0.0;
      for (double f : density[a]) {
        if (!(f >= 0.0)) throw InvalidArgument("densities must be >= 0");
        s += f;
      }
      if (std::abs(s - 1.0) > 1e-12) {
        throw InvalidArgument("density for effort " + std::to_string(a) +
                              " sums to " + format_real(s));
      }
      if (a > 0 && effort_costs[a] < effort_costs[a - 1]) {
        throw InvalidArgument("effort costs must be non-decreasing");
      }
    }
    for (double c : effort_costs) {
      if (!std::isfinite(c)) throw InvalidArgument("effort costs must be finite");
    }
    if (!std::isfinite(reservation)) throw InvalidArgument("reservation must be finite");
    for (std::size_t i = 1; i < wage_grid.size(); ++i) {
      if (!(wage_grid[i] > wage_grid[i - 1])) {
        throw InvalidArgument("wage grid must be strictly increasing");
      }
    }
    std::vector<double> u(wage_grid.size());
    for (std::size_t i = 0; i < u.size(); ++i) {
      u[i] = agent_utility(wage_grid[i]);
      if (!std::isfinite(u[i])) {
        throw InvalidArgument("agent utility undefined at wage " + format_real(wage_grid[i]));
      }
      if (i > 0 && !(u[i] > u[i - 1])) {
        throw InvalidArgument("agent utility must be strictly increasing on the grid");
      }
    }
    for (std::size_t i = 2; i < u.size(); ++i) {
      const double d0 = (u[i - 1] - u[i - 2]) / (wage_grid[i - 1] - wage_grid[i - 2]);
      const double d1 = (u[i] - u[i - 1]) / (wage_grid[i] - wage_grid[i - 1]);
      if (d1 > d0 * (1.0 + 1e-12) + 1e-15) {
        throw InvalidArgument("agent utility must be concave on the grid");
      }
    }
  }
};

enum class ContractKind { first_best, second_best };

inline const char* to_string(ContractKind k) {
  return k == ContractKind::first_best ? "first_best" : "second_best";
}

struct ContractSolution {
  ContractKind kind = ContractKind::first_best;
  std::size_t effort = 0;
  std::vector<std::size_t> wage_levels;  ///< index into the wage grid per outcome
  std::vector<double> rule;              ///< wage per outcome
  double principal_value = 0.0;
  double agent_value = 0.0;
  /// Agent's expected utility under the rule for every effort level.
  std::vector<double> agent_values;
  bool exact = true;  ///< false if the search budget ran out
  std::uint64_t nodes = 0;
};

struct ContractOptions {
  double ir_tol = 1e-12;
  double ic_tol = 1e-12;  ///< agent ties within this go the principal's way
  std::uint64_t max_nodes = 50'000'000;
};

namespace detail {

/// Sum_x coef[x] * u(s_x) >= rhs.
struct LinearConstraint {
  std::vector<double> coef;
  double rhs = 0.0;
};

struct ContractSearch {
  const ContractProblem& p;
  const ContractOptions& opts;
  std::size_t effort;
  std::vector<LinearConstraint> cons;
  std::vector<double> u;                    // u(wage level)
  std::vector<std::vector<double>> obj;     // obj[x][level]
  std::vector<double> obj_tail;             // best objective over outcomes >= x
  std::vector<std::vector<double>> con_tail;  // [constraint][x]
  std::vector<double> con_tol;

  std::vector<std::size_t> current;
  std::vector<std::size_t> best_levels;
  double best = -std::numeric_limits<double>::infinity();
  bool found = false;
  std::uint64_t nodes = 0;
  bool budget_hit = false;

  ContractSearch(const ContractProblem& prob, const ContractOptions& o,
                 std::size_t a, std::vector<LinearConstraint> constraints,
                 std::vector<double> tolerances)
      : p(prob), opts(o), effort(a), cons(std::move(constraints)),
        con_tol(std::move(tolerances)) {
    const std::size_t k = p.outcome_count();
    const std::size_t levels = p.wage_grid.size();
    u.resize(levels);
    for (std::size_t l = 0; l < levels; ++l) u[l] = p.agent_utility(p.wage_grid[l]);
    obj.assign(k, std::vector<double>(levels));
    obj_tail.assign(k + 1, 0.0);
    for (std::size_t x = 0; x < k; ++x) {
      for (std::size_t l = 0; l < levels; ++l) {
        const double g = p.principal_utility(p.outcomes[x] - p.wage_grid[l]);
        obj[x][l] = p.density[a][x] == 0.0 ? 0.0 : p.density[a][x] * g;
      }
    }
    for (std::size_t x = k; x-- > 0;) {
      obj_tail[x] = obj_tail[x + 1] + *std::max_element(obj[x].begin(), obj[x].end());
    }
    con_tail.assign(cons.size(), std::vector<double>(k + 1, 0.0));
    for (std::size_t j = 0; j < cons.size(); ++j) {
      for (std::size_t x = k; x-- > 0;) {
        const double c = cons[j].coef[x];
        const double m = c >= 0.0 ? c * u.back() : c * u.front();
        con_tail[j][x] = con_tail[j][x + 1] + m;
      }
    }
    current.assign(k, 0);
  }

  void run() {
    std::vector<double> sums(cons.size(), 0.0);
    dfs(0, 0.0, sums);
  }

  bool feasible(const std::vector<double>& sums) const {
    for (std::size_t j = 0; j < cons.size(); ++j) {
      if (sums[j] < cons[j].rhs - con_tol[j]) return false;
    }
    return true;
  }

  void dfs(std::size_t x, double value, std::vector<double>& sums) {
    if (budget_hit) return;
    if (++nodes > opts.max_nodes) {
      budget_hit = true;
      return;
    }
    if (x == current.size()) {
      if (std::isfinite(value) && feasible(sums) && (!found || value > best)) {
        best = value;
        best_levels = current;
        found = true;
      }
      return;
    }
    // Conservative margins: only prune when the bound is clearly worse.
    if (found) {
      const double bound = value + obj_tail[x];
      if (bound < best - 1e-12 * (1.0 + std::abs(best))) return;
    }
    for (std::size_t j = 0; j < cons.size(); ++j) {
      const double reach = sums[j] + con_tail[j][x];
      if (reach < cons[j].rhs - con_tol[j] - 1e-12 * (1.0 + std::abs(reach))) return;
    }
    std::vector<double> next(sums.size());
    for (std::size_t l = 0; l < u.size(); ++l) {
      current[x] = l;
      for (std::size_t j = 0; j < cons.size(); ++j) {
        next[j] = sums[j] + cons[j].coef[x] * u[l];
      }
      dfs(x + 1, value + obj[x][l], next);
      if (budget_hit) return;
    }
  }

  double objective(const std::vector<std::size_t>& levels) const {
    double v = 0.0;
    for (std::size_t x = 0; x < levels.size(); ++x) v += obj[x][levels[x]];
    return v;
  }

  bool feasible_levels(const std::vector<std::size_t>& levels) const {
    std::vector<double> sums(cons.size(), 0.0);
    for (std::size_t j = 0; j < cons.size(); ++j) {
      for (std::size_t x = 0; x < levels.size(); ++x) sums[j] += cons[j].coef[x] * u[levels[x]];
    }
    return feasible(sums);
  }

  // Single-outcome moves from the incumbent until no move helps.
  void coordinate_ascent() {
    std::vector<std::size_t> cur = found ? best_levels
                                         : std::vector<std::size_t>(current.size(), u.size() - 1);
    if (!feasible_levels(cur)) return;
    double val = objective(cur);
    bool improved = true;
    while (improved) {
      improved = false;
      for (std::size_t x = 0; x < cur.size(); ++x) {
        const std::size_t keep = cur[x];
        for (std::size_t l = 0; l < u.size(); ++l) {
          if (l == keep) continue;
          cur[x] = l;
          const double v = objective(cur);
          if (v > val && feasible_levels(cur)) {
            val = v;
            improved = true;
            break;
          }
          cur[x] = keep;
        }
      }
    }
    best = val;
    best_levels = cur;
    found = true;
  }
};

inline std::vector<double> agent_values(const ContractProblem& p,
                                        const std::vector<double>& rule) {
  std::vector<double> out(p.effort_count());
  for (std::size_t a = 0; a < p.effort_count(); ++a) {
    double v = 0.0;
    for (std::size_t x = 0; x < rule.size(); ++x) {
      v += p.density[a][x] * p.agent_utility(rule[x]);
    }
    out[a] = v - p.effort_costs[a];
  }
  return out;
}

inline ContractSolution solve_contract(const ContractProblem& p, ContractKind kind,
                                       const ContractOptions& opts) {
  p.validate();
  const std::size_t efforts = p.effort_count();
  ContractSolution best;
  bool have = false;
  double best_value = -std::numeric_limits<double>::infinity();
  std::uint64_t nodes = 0;
  bool exact = true;
  for (std::size_t a = 0; a < efforts; ++a) {
    std::vector<LinearConstraint> cons;
    std::vector<double> tols;
    cons.push_back({p.density[a], p.reservation + p.effort_costs[a]});
    tols.push_back(opts.ir_tol);
    if (kind == ContractKind::second_best) {
      for (std::size_t b = 0; b < efforts; ++b) {
        if (b == a) continue;
        LinearConstraint c;
        c.coef.resize(p.outcome_count());
        for (std::size_t x = 0; x < p.outcome_count(); ++x) {
          c.coef[x] = p.density[a][x] - p.density[b][x];
        }
        c.rhs = p.effort_costs[a] - p.effort_costs[b];
        cons.push_back(std::move(c));
        tols.push_back(opts.ic_tol);
      }
    }
    ContractSearch search(p, opts, a, std::move(cons), std::move(tols));
    search.run();
    nodes += search.nodes;
    if (search.budget_hit) {
      exact = false;
      search.coordinate_ascent();
    }
    if (!search.found) continue;
    if (!have || search.best > best_value) {
      have = true;
      best_value = search.best;
      best.effort = a;
      best.wage_levels = search.best_levels;
    }
  }
  if (!have) {
    throw Infeasible(std::string("no ") + to_string(kind) +
                     " rule on the wage grid meets the participation constraint");
  }
  best.kind = kind;
  best.principal_value = best_value;
  best.rule.resize(best.wage_levels.size());
  for (std::size_t x = 0; x < best.rule.size(); ++x) {
    best.rule[x] = p.wage_grid[best.wage_levels[x]];
  }
  best.agent_values = agent_values(p, best.rule);
  best.agent_value = best.agent_values[best.effort];
  best.exact = exact;
  best.nodes = nodes;
  return best;
}

}  // namespace detail

/// Best (rule, effort) subject to participation only.
inline ContractSolution solve_first_best(const ContractProblem& p,
                                         const ContractOptions& opts = {}) {
  return detail::solve_contract(p, ContractKind::first_best, opts);
}

/// Best (rule, effort) subject to participation and incentive compatibility,
/// with the agent's choice an exact argmax over the effort set.
inline ContractSolution solve_second_best(const ContractProblem& p,
                                          const ContractOptions& opts = {}) {
  return detail::solve_contract(p, ContractKind::second_best, opts);
}

struct WelfareGap {
  ContractSolution first_best;
  ContractSolution second_best;
  double gap = 0.0;  ///< first-best minus second-best principal value
  int effort_change = 0;  ///< sign of second-best effort minus first-best effort
};

inline WelfareGap welfare_gap(const ContractProblem& p, const ContractOptions& opts = {}) {
  WelfareGap g;
  g.first_best = solve_first_best(p, opts);
  g.second_best = solve_second_best(p, opts);
  g.gap = g.first_best.principal_value - g.second_best.principal_value;
  const auto fb = g.first_best.effort;
  const auto sb = g.second_best.effort;
  g.effort_change = sb < fb ? -1 : (sb > fb ? 1 : 0);
  return g;
}

/// True when every effort level induces the same outcome distribution.
inline bool effort_independent(const ContractProblem& p) {
  for (std::size_t a = 1; a < p.density.size(); ++a) {
    if (p.density[a] != p.density[0]) return false;
  }
  return true;
}

}  // namespace labmarket
