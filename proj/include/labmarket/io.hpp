#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <json.hpp>

#include "labmarket/comparison.hpp"
#include "labmarket/equilibrium.hpp"
#include "labmarket/format.hpp"
#include "labmarket/moral_hazard.hpp"
#include "labmarket/multiperiod.hpp"
#include "labmarket/simulator.hpp"

namespace labmarket {

using Json = nlohmann::ordered_json;

namespace detail {

// Non-finite values travel as null.
inline Json jnum(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }
inline double jget(const Json& j, const char* key) {
  const Json& v = j.at(key);
  return v.is_null() ? kNaN : v.get<double>();
}
inline Json jnums(const std::vector<double>& v) {
  Json a = Json::array();
  for (double x : v) a.push_back(jnum(x));
  return a;
}
inline std::vector<double> jgets(const Json& a) {
  std::vector<double> out;
  for (const auto& x : a) out.push_back(x.is_null() ? kNaN : x.get<double>());
  return out;
}

}  // namespace detail

inline void to_json(Json& j, const Comparison& c) {
  j = Json{{"lhs", c.lhs_name}, {"rhs", c.rhs_name}, {"lhs_value", detail::jnum(c.lhs)},
           {"rhs_value", detail::jnum(c.rhs)}, {"relation", to_string(c.relation)},
           {"holds", c.strict()}};
}

inline Json report_json(const InequalityReport& r) {
  return Json{{"holds_strictly", r.holds_strictly()},
              {"holds_weakly", r.holds_weakly()},
              {"claims", r.claims},
              {"informational", r.informational}};
}

inline void to_json(Json& j, const TwoPeriodSolution& s) {
  using detail::jnum;
  j = Json{{"mu", jnum(s.mu)},
           {"w0", jnum(s.w0)},
           {"w1", jnum(s.w1)},
           {"theta_bar", jnum(s.theta_bar)},
           {"theta_bar2", jnum(s.theta_bar2)},
           {"n_mass", jnum(s.n_mass)},
           {"q_mass", jnum(s.q_mass)},
           {"residual_fixed_point", jnum(s.residual_fixed_point)},
           {"residual_zero_profit", jnum(s.residual_zero_profit)},
           {"collapsed", s.collapsed},
           {"entry_collapsed", s.entry_collapsed},
           {"roots", detail::jnums(s.roots)}};
}

inline void from_json(const Json& j, TwoPeriodSolution& s) {
  using detail::jget;
  s.mu = jget(j, "mu");
  s.w0 = jget(j, "w0");
  s.w1 = jget(j, "w1");
  s.theta_bar = jget(j, "theta_bar");
  s.theta_bar2 = jget(j, "theta_bar2");
  s.n_mass = jget(j, "n_mass");
  s.q_mass = jget(j, "q_mass");
  s.residual_fixed_point = jget(j, "residual_fixed_point");
  s.residual_zero_profit = jget(j, "residual_zero_profit");
  s.collapsed = j.at("collapsed").get<bool>();
  s.entry_collapsed = j.at("entry_collapsed").get<bool>();
  s.roots = detail::jgets(j.at("roots"));
}

inline void to_json(Json& j, const ThreePeriodMasses& m) {
  using detail::jnum;
  j = Json{{"n_entry", jnum(m.n_entry)},       {"n_second", jnum(m.n_second)},
           {"q_first", jnum(m.q_first)},       {"n_third", jnum(m.n_third)},
           {"q_second", jnum(m.q_second)},     {"n_double_second", jnum(m.n_double_second)},
           {"q_double_second", jnum(m.q_double_second)}};
}

inline void from_json(const Json& j, ThreePeriodMasses& m) {
  using detail::jget;
  m.n_entry = jget(j, "n_entry");
  m.n_second = jget(j, "n_second");
  m.q_first = jget(j, "q_first");
  m.n_third = jget(j, "n_third");
  m.q_second = jget(j, "q_second");
  m.n_double_second = jget(j, "n_double_second");
  m.q_double_second = jget(j, "q_double_second");
}

inline const char* const kThreePeriodResidualNames[5] = {
    "third_market_fixed_point", "double_second_fixed_point", "stayer_indifference",
    "entry_zero_profit", "second_market_zero_profit"};

inline void to_json(Json& j, const ThreePeriodSolution& s) {
  using detail::jnum;
  Json res = Json::object();
  for (std::size_t k = 0; k < 5; ++k) res[kThreePeriodResidualNames[k]] = jnum(s.residuals[k]);
  j = Json{{"mu", jnum(s.mu)},
           {"w0", jnum(s.w0)},
           {"w1", jnum(s.w1)},
           {"w_plus", jnum(s.w_plus)},
           {"w2", jnum(s.w2)},
           {"w2p", jnum(s.w2p)},
           {"theta_bar", jnum(s.theta_bar)},
           {"theta_bar_second", jnum(s.theta_bar_second)},
           {"theta_bar_q1", jnum(s.theta_bar_q1)},
           {"theta_bar_q2", jnum(s.theta_bar_q2)},
           {"residuals", res},
           {"masses", s.masses},
           {"single_factor_masses", s.single_factor_masses},
           {"w_plus_roots", detail::jnums(s.w_plus_roots)},
           {"multi_equilibrium", s.multi_equilibrium},
           {"w_plus_negative", s.w_plus_negative},
           {"converged", s.converged}};
}

inline void from_json(const Json& j, ThreePeriodSolution& s) {
  using detail::jget;
  s.mu = jget(j, "mu");
  s.w0 = jget(j, "w0");
  s.w1 = jget(j, "w1");
  s.w_plus = jget(j, "w_plus");
  s.w2 = jget(j, "w2");
  s.w2p = jget(j, "w2p");
  s.theta_bar = jget(j, "theta_bar");
  s.theta_bar_second = jget(j, "theta_bar_second");
  s.theta_bar_q1 = jget(j, "theta_bar_q1");
  s.theta_bar_q2 = jget(j, "theta_bar_q2");
  for (std::size_t k = 0; k < 5; ++k) {
    s.residuals[k] = jget(j.at("residuals"), kThreePeriodResidualNames[k]);
  }
  s.masses = j.at("masses").get<ThreePeriodMasses>();
  s.single_factor_masses = j.at("single_factor_masses").get<ThreePeriodMasses>();
  s.w_plus_roots = detail::jgets(j.at("w_plus_roots"));
  s.multi_equilibrium = j.at("multi_equilibrium").get<bool>();
  s.w_plus_negative = j.at("w_plus_negative").get<bool>();
  s.converged = j.at("converged").get<bool>();
}

inline void to_json(Json& j, const SimulatedMarket& m) {
  using detail::jnum;
  j = Json{{"history", m.history},
           {"count", m.count},
           {"share", jnum(m.share)},
           {"mean", jnum(m.mean)},
           {"sd", jnum(m.sd)},
           {"stderr_halfwidth", jnum(m.halfwidth)},
           {"wage", jnum(m.wage)},
           {"break_even", jnum(m.break_even)},
           {"profit_per_capita", jnum(m.profit_per_capita)}};
}

inline void from_json(const Json& j, SimulatedMarket& m) {
  using detail::jget;
  m.history = j.at("history").get<std::string>();
  m.count = j.at("count").get<std::uint64_t>();
  m.share = jget(j, "share");
  m.mean = jget(j, "mean");
  m.sd = jget(j, "sd");
  m.halfwidth = jget(j, "stderr_halfwidth");
  m.wage = jget(j, "wage");
  m.break_even = jget(j, "break_even");
  m.profit_per_capita = jget(j, "profit_per_capita");
}

inline void to_json(Json& j, const ContractSolution& s) {
  j = Json{{"kind", to_string(s.kind)},
           {"effort", s.effort},
           {"wage_levels", s.wage_levels},
           {"rule", detail::jnums(s.rule)},
           {"principal_value", detail::jnum(s.principal_value)},
           {"agent_value", detail::jnum(s.agent_value)},
           {"agent_values", detail::jnums(s.agent_values)},
           {"exact", s.exact},
           {"nodes", s.nodes}};
}

inline void from_json(const Json& j, ContractSolution& s) {
  s.kind = j.at("kind").get<std::string>() == "first_best" ? ContractKind::first_best
                                                            : ContractKind::second_best;
  s.effort = j.at("effort").get<std::size_t>();
  s.wage_levels = j.at("wage_levels").get<std::vector<std::size_t>>();
  s.rule = detail::jgets(j.at("rule"));
  s.principal_value = detail::jget(j, "principal_value");
  s.agent_value = detail::jget(j, "agent_value");
  s.agent_values = detail::jgets(j.at("agent_values"));
  s.exact = j.at("exact").get<bool>();
  s.nodes = j.at("nodes").get<std::uint64_t>();
}

inline void to_json(Json& j, const WelfareRow& r) {
  using detail::jnum;
  j = Json{{"decile", r.decile},
           {"theta_mean", jnum(r.theta_mean)},
           {"two_period_wage", jnum(r.two_period_wage)},
           {"three_period_wage", jnum(r.three_period_wage)},
           {"difference", jnum(r.difference)},
           {"two_period_shortfall", jnum(r.two_period_shortfall)},
           {"three_period_shortfall", jnum(r.three_period_shortfall)},
           {"two_period_path_sd", jnum(r.two_period_path_sd)},
           {"three_period_path_sd", jnum(r.three_period_path_sd)}};
}

inline void from_json(const Json& j, WelfareRow& r) {
  using detail::jget;
  r.decile = j.at("decile").get<int>();
  r.theta_mean = jget(j, "theta_mean");
  r.two_period_wage = jget(j, "two_period_wage");
  r.three_period_wage = jget(j, "three_period_wage");
  r.difference = jget(j, "difference");
  r.two_period_shortfall = jget(j, "two_period_shortfall");
  r.three_period_shortfall = jget(j, "three_period_shortfall");
  r.two_period_path_sd = jget(j, "two_period_path_sd");
  r.three_period_path_sd = jget(j, "three_period_path_sd");
}

/// One market of a tree, as emitted.
struct TreeRow {
  std::string history;
  int period = 0;
  double mass = kNaN;
  double mean = kNaN;
  double threshold = kNaN;
  double wage = kNaN;
  bool off_firm = false;
};

inline TreeRow tree_row(const MarketNode& n) {
  return {n.history, n.period, n.mass, n.mean, n.threshold, n.wage, n.off_firm()};
}

inline void to_json(Json& j, const TreeRow& r) {
  using detail::jnum;
  j = Json{{"history", r.history}, {"period", r.period},   {"mass", jnum(r.mass)},
           {"mean", jnum(r.mean)}, {"threshold", jnum(r.threshold)},
           {"wage", jnum(r.wage)}, {"off_firm", r.off_firm}};
}

inline void from_json(const Json& j, TreeRow& r) {
  using detail::jget;
  r.history = j.at("history").get<std::string>();
  r.period = j.at("period").get<int>();
  r.mass = jget(j, "mass");
  r.mean = jget(j, "mean");
  r.threshold = jget(j, "threshold");
  r.wage = jget(j, "wage");
  r.off_firm = j.at("off_firm").get<bool>();
}

// CSV tables. Column names and order are stable.

inline const std::vector<std::string>& two_period_columns() {
  static const std::vector<std::string> c{"mu",        "w1",
                                          "theta_bar", "w0",
                                          "theta_bar2", "residual_fixed_point",
                                          "residual_zero_profit", "collapsed"};
  return c;
}

inline void add_row(CsvWriter& w, const TwoPeriodSolution& s) {
  CsvWriter::Row r;
  r << s.mu << s.w1 << s.theta_bar << s.w0 << s.theta_bar2 << s.residual_fixed_point
    << s.residual_zero_profit << s.collapsed;
  w.add(r);
}

inline const std::vector<std::string>& three_period_columns() {
  static const std::vector<std::string> c{
      "mu",           "status",           "w0",           "w1",
      "w_plus",       "w2",               "w2p",          "theta_bar",
      "theta_bar_second", "theta_bar_q1", "theta_bar_q2", "max_abs_residual",
      "multi_equilibrium", "multistart_agree", "multistart_spread",
      "third_period_ordering", "stayer_underpayment"};
  return c;
}

struct ThreePeriodCell {
  double mu = kNaN;
  std::string status = "ok";  ///< ok | no_convergence | degenerate | invalid
  std::string message;
  ThreePeriodSolution solution;
  bool multistart_run = false;
  bool multistart_agree = false;
  double multistart_spread = kNaN;
  std::vector<double> best_residuals;
};

inline void add_row(CsvWriter& w, const ThreePeriodCell& c) {
  const auto& s = c.solution;
  const bool ok = c.status == "ok";
  CsvWriter::Row r;
  r << c.mu << c.status << s.w0 << s.w1 << s.w_plus << s.w2 << s.w2p << s.theta_bar
    << s.theta_bar_second << s.theta_bar_q1 << s.theta_bar_q2
    << (ok ? s.max_abs_residual() : kNaN) << s.multi_equilibrium
    << (c.multistart_run ? (c.multistart_agree ? "true" : "false") : "")
    << c.multistart_spread
    << (ok ? (check_third_period_ordering(s).holds_strictly() ? "true" : "false") : "")
    << (ok ? (check_stayer_underpayment(s).holds_strictly() ? "true" : "false") : "");
  w.add(r);
}

inline Json cell_json(const ThreePeriodCell& c) {
  Json j{{"mu", detail::jnum(c.mu)}, {"status", c.status}};
  if (!c.message.empty()) j["message"] = c.message;
  if (c.status != "ok") {
    j["best_residuals"] = detail::jnums(c.best_residuals);
    return j;
  }
  j["result"] = c.solution;
  j["third_period_ordering"] = report_json(check_third_period_ordering(c.solution));
  j["stayer_underpayment"] = report_json(check_stayer_underpayment(c.solution));
  if (c.multistart_run) {
    j["multistart"] = Json{{"agree", c.multistart_agree},
                           {"max_spread", detail::jnum(c.multistart_spread)}};
  }
  return j;
}

}  // namespace labmarket
