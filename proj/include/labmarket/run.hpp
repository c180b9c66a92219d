#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "labmarket/config.hpp"
#include "labmarket/io.hpp"

namespace labmarket {

enum class OutputFormat { csv, json };

struct RunOptions {
  OutputFormat format = OutputFormat::csv;
  unsigned jobs = 1;
  std::optional<std::uint64_t> seed;
  std::optional<double> tol;
  bool series = false;  ///< also produce the (w, M(w)) series
};

struct RunResult {
  int exit_code = 0;  ///< 0 ok, 1 usage or config error, 2 non-convergence
  std::string output;
  std::string series;  ///< CSV, when requested
  std::string message;
};

namespace detail {

inline std::string dump(const Json& j) { return j.dump(2) + "\n"; }

inline ThreePeriodCell solve_cell(const ProductivityDistribution& dist, double mu,
                                  const RunConfig& cfg, unsigned jobs) {
  ThreePeriodCell c;
  c.mu = mu;
  try {
    c.solution = solve_three_period(dist, QuitFactor(mu), cfg.solver, cfg.three);
    if (cfg.three.starts > 0) {
      ThreePeriodOptions t = cfg.three;
      t.jobs = jobs;
      const auto ms = multistart_three_period(dist, QuitFactor(mu), cfg.solver, t);
      c.multistart_run = true;
      c.multistart_agree = ms.agree;
      c.multistart_spread = ms.max_spread;
    }
  } catch (const NoConvergence& e) {
    c.status = "no_convergence";
    c.message = e.what();
    c.best_residuals = e.best_residuals();
  } catch (const DegenerateSystem& e) {
    c.status = "degenerate";
    c.message = e.what();
  } catch (const InvalidArgument& e) {
    c.status = "invalid";
    c.message = e.what();
  }
  return c;
}

inline Json base_json(const RunConfig& cfg) {
  Json j{{"subcommand", to_string(cfg.subcommand)}};
  if (cfg.regime) j["regime"] = to_string(*cfg.regime);
  if (cfg.dist) j["dist"] = cfg.dist->describe();
  if (cfg.mu) j["mu"] = *cfg.mu;
  return j;
}

inline std::string m_series(const RunConfig& cfg) {
  const auto& d = *cfg.dist;
  const double lo = std::isfinite(cfg.series_low) ? cfg.series_low : d.support_low();
  const double hi = std::isfinite(cfg.series_high) ? cfg.series_high : d.support_high();
  const LaborPool pool(d);
  const QuitFactor mu(*cfg.mu);
  CsvWriter w({"w", "m_of_w"});
  for (int k = 0; k < cfg.series_points; ++k) {
    const double x = k == cfg.series_points - 1
                         ? hi
                         : lo + (hi - lo) * k / (cfg.series_points - 1);
    double m = kNaN;
    try {
      m = m_operator(pool, x, mu);
    } catch (const EmptyPool&) {
    }
    CsvWriter::Row r;
    r << x << m;
    w.add(r);
  }
  return w.str();
}

inline RunResult run_solve(const RunConfig& cfg, const RunOptions& o) {
  RunResult res;
  const auto& d = *cfg.dist;
  const double mu = *cfg.mu;
  Json j = base_json(cfg);
  switch (*cfg.regime) {
    case SolveRegime::one_period: {
      const auto r = one_period_wage(d);
      if (o.format == OutputFormat::json) {
        j["result"] = Json{{"wage", r.wage}, {"collapsed", r.collapsed}, {"theta_bar", d.mean()}};
        res.output = dump(j);
      } else {
        CsvWriter w({"wage", "collapsed", "theta_bar"});
        CsvWriter::Row row;
        row << r.wage << r.collapsed << d.mean();
        w.add(row);
        res.output = w.str();
      }
      break;
    }
    case SolveRegime::two_period: {
      const auto s = solve_two_period(d, QuitFactor(mu), cfg.solver);
      if (o.format == OutputFormat::json) {
        j["result"] = s;
        if (!s.collapsed) j["ordering"] = report_json(check_two_period_ordering(s));
        res.output = dump(j);
      } else {
        CsvWriter w(two_period_columns());
        add_row(w, s);
        res.output = w.str();
      }
      break;
    }
    case SolveRegime::three_period: {
      const auto c = solve_cell(d, mu, cfg, o.jobs);
      if (c.status == "no_convergence") res.exit_code = 2;
      if (c.status == "invalid" || c.status == "degenerate") {
        res.exit_code = c.status == "invalid" ? 1 : 2;
        res.message = c.message;
      }
      if (o.format == OutputFormat::json) {
        j.update(cell_json(c));
        res.output = dump(j);
      } else {
        CsvWriter w(three_period_columns());
        add_row(w, c);
        res.output = w.str();
        if (c.status == "no_convergence") {
          CsvWriter diag({"residual", "value"});
          for (std::size_t k = 0; k < c.best_residuals.size(); ++k) {
            CsvWriter::Row r;
            const bool named = c.best_residuals.size() == 5;
            r << (named ? std::string(kThreePeriodResidualNames[k])
                        : "residual_" + std::to_string(k))
              << c.best_residuals[k];
            diag.add(r);
          }
          res.output += "\n" + diag.str();
        }
      }
      if (res.exit_code == 2 && res.message.empty()) res.message = c.message;
      break;
    }
  }
  if (o.series) res.series = m_series(cfg);
  return res;
}

inline RunResult run_sweep(const RunConfig& cfg, const RunOptions& o) {
  RunResult res;
  const auto& d = *cfg.dist;
  const auto& grid = cfg.mu_grid;
  Json j = base_json(cfg);
  j["mu_grid"] = grid;
  if (*cfg.regime == SolveRegime::three_period) {
    // Cells in parallel, multistarts inside each cell serial.
    std::vector<ThreePeriodCell> cells(grid.size());
    parallel_for(grid.size(), o.jobs, [&](std::size_t i) {
      cells[i] = solve_cell(d, grid[i], cfg, 1);
    });
    CsvWriter w(three_period_columns());
    Json rows = Json::array();
    for (const auto& c : cells) {
      add_row(w, c);
      rows.push_back(cell_json(c));
      if (c.status != "ok" && res.exit_code == 0) {
        res.exit_code = 2;
        res.message = "mu=" + format_real(c.mu) + ": " + c.message;
      }
    }
    j["rows"] = rows;
    res.output = o.format == OutputFormat::json ? dump(j) : w.str();
    return res;
  }
  if (*cfg.regime == SolveRegime::one_period) {
    throw InvalidArgument("sweep needs two_period or three_period");
  }
  std::vector<TwoPeriodSolution> sols(grid.size());
  std::vector<std::string> errors(grid.size());
  parallel_for(grid.size(), o.jobs, [&](std::size_t i) {
    try {
      sols[i] = solve_two_period(d, QuitFactor(grid[i]), cfg.solver);
    } catch (const Error& e) {
      sols[i].mu = grid[i];
      errors[i] = e.what();
    }
  });
  CsvWriter w(two_period_columns());
  Json rows = Json::array();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    add_row(w, sols[i]);
    Json r = sols[i];
    if (!errors[i].empty()) {
      r["error"] = errors[i];
      if (res.exit_code == 0) {
        res.exit_code = 2;
        res.message = "mu=" + format_real(grid[i]) + ": " + errors[i];
      }
    }
    rows.push_back(r);
  }
  j["rows"] = rows;
  res.output = o.format == OutputFormat::json ? dump(j) : w.str();
  return res;
}

inline RunResult run_tree(const RunConfig& cfg, const RunOptions& o) {
  RunResult res;
  const auto& d = *cfg.dist;
  const QuitFactor mu(*cfg.mu);
  const int n = cfg.n_periods;
  std::vector<double> thresholds = cfg.thresholds;
  std::vector<double> wages;
  if (thresholds.empty() && n == 2) {
    const auto s = solve_two_period(d, mu, cfg.solver);
    thresholds = {s.w1};
    wages = two_period_node_wages(s);
  } else if (thresholds.empty() && n == 3) {
    const auto s = solve_three_period(d, mu, cfg.solver, cfg.three);
    thresholds = three_period_thresholds(s);
    wages = three_period_node_wages(s);
  }
  const MarketTree tree = build_market_tree(d, mu, n, thresholds, wages);
  std::vector<TreeRow> rows;
  for (const auto& node : tree.nodes()) rows.push_back(tree_row(node));
  if (o.format == OutputFormat::json) {
    Json j = base_json(cfg);
    j["n_periods"] = n;
    j["off_firm_markets"] = tree.off_firm_count();
    j["submarket_count"] = submarket_count(n);
    j["nodes"] = rows;
    res.output = dump(j);
  } else {
    CsvWriter w({"history", "period", "mass", "mean", "threshold", "wage", "off_firm"});
    for (const auto& r : rows) {
      CsvWriter::Row row;
      row << r.history << r.period << r.mass << r.mean << r.threshold << r.wage << r.off_firm;
      w.add(row);
    }
    res.output = w.str();
  }
  return res;
}

inline RunResult run_simulate(const RunConfig& cfg, const RunOptions& o) {
  RunResult res;
  const auto& d = *cfg.dist;
  const QuitFactor mu(*cfg.mu);
  const std::uint64_t seed = o.seed.value_or(cfg.seed);
  SimulationConfig sc;
  if (*cfg.regime == SolveRegime::two_period) {
    sc = simulation_config(d, solve_two_period(d, mu, cfg.solver), cfg.n_agents, seed);
  } else {
    sc = simulation_config(d, solve_three_period(d, mu, cfg.solver, cfg.three),
                           cfg.n_agents, seed);
  }
  sc.jobs = o.jobs;
  const auto rep = simulate(sc);
  const MarketTree tree =
      build_market_tree(d, mu, regime_periods(sc.regime), sc.thresholds);
  if (o.format == OutputFormat::json) {
    Json j = base_json(cfg);
    j["seed"] = seed;
    j["n_agents"] = rep.n_agents;
    Json markets = Json::array();
    for (const auto& m : rep.markets) {
      Json mj = m;
      mj["analytic_mean"] = detail::jnum(tree.at(m.history).mean);
      markets.push_back(mj);
    }
    j["markets"] = markets;
    j["firm_profit"] = detail::jnum(rep.firm_profit);
    j["firm_profit_halfwidth"] = detail::jnum(rep.firm_profit_halfwidth);
    res.output = dump(j);
  } else {
    CsvWriter w({"history", "count", "share", "mean", "stderr_halfwidth", "analytic_mean",
                 "wage", "break_even", "profit_per_capita"});
    for (const auto& m : rep.markets) {
      CsvWriter::Row r;
      r << m.history << static_cast<unsigned long long>(m.count) << m.share << m.mean
        << m.halfwidth << tree.at(m.history).mean << m.wage << m.break_even
        << m.profit_per_capita;
      w.add(r);
    }
    CsvWriter::Row r;
    r << "firm_profit" << static_cast<unsigned long long>(rep.n_agents) << 1.0
      << rep.firm_profit << rep.firm_profit_halfwidth << 0.0 << kNaN << kNaN
      << rep.firm_profit;
    w.add(r);
    res.output = w.str();
  }
  return res;
}

inline RunResult run_welfare(const RunConfig& cfg, const RunOptions& o) {
  RunResult res;
  const auto rep = welfare_comparison(*cfg.dist, QuitFactor(*cfg.mu), cfg.solver,
                                      cfg.three, cfg.samples_per_decile);
  if (o.format == OutputFormat::json) {
    Json j = base_json(cfg);
    j["deciles"] = rep.deciles;
    j["aggregate_two"] = rep.aggregate_two;
    j["aggregate_three"] = rep.aggregate_three;
    j["aggregate_difference"] = rep.aggregate_difference;
    j["stayer_path_three"] = rep.stayer_path_three;
    j["path_two"] = rep.path_two;
    j["stayer_path_difference"] = rep.stayer_path_difference;
    j["two_period"] = rep.two;
    j["three_period"] = rep.three;
    res.output = dump(j);
  } else {
    CsvWriter w({"decile", "theta_mean", "two_period_wage", "three_period_wage", "difference",
                 "two_period_shortfall", "three_period_shortfall", "two_period_path_sd",
                 "three_period_path_sd"});
    for (const auto& d : rep.deciles) {
      CsvWriter::Row r;
      r << d.decile << d.theta_mean << d.two_period_wage << d.three_period_wage
        << d.difference << d.two_period_shortfall << d.three_period_shortfall
        << d.two_period_path_sd << d.three_period_path_sd;
      w.add(r);
    }
    res.output = w.str();
  }
  return res;
}

inline RunResult run_screening(const RunConfig& cfg, const RunOptions& o) {
  RunResult res;
  const auto& s = cfg.screening;
  const double fired = fired_fraction(s);
  const double p = residual_below_average_probability(s);
  const std::string policy = s.policy == StraddlePolicy::fire_below_average_part
                                 ? "fire_below_average_part"
                                 : "keep_whole_slice";
  std::optional<int> critical;
  if (s.m_allowed >= 1) critical = critical_assessment_periods(s.m_allowed);
  if (o.format == OutputFormat::json) {
    Json j{{"subcommand", "screening"},
           {"n_total", s.n_total},
           {"m_allowed", s.m_allowed},
           {"theta_low", s.theta_low},
           {"theta_high", s.theta_high},
           {"policy", policy},
           {"fired_fraction", fired},
           {"residual_below_average_probability", p},
           {"critical_assessment_periods", critical ? Json(*critical) : Json(nullptr)}};
    Json slices = Json::array();
    for (int t = 0; t < s.n_total; ++t) {
      const auto iv = distinguishable_interval(t, s);
      slices.push_back(Json{{"t", t}, {"lo", iv.lo}, {"hi", iv.hi}, {"revealed", t < s.m_allowed}});
    }
    j["slices"] = slices;
    res.output = dump(j);
  } else {
    CsvWriter w({"n_total", "m_allowed", "theta_low", "theta_high", "policy", "fired_fraction",
                 "residual_below_average_probability", "critical_assessment_periods"});
    CsvWriter::Row r;
    r << s.n_total << s.m_allowed << s.theta_low << s.theta_high << policy << fired << p
      << (critical ? std::to_string(*critical) : std::string());
    w.add(r);
    res.output = w.str();
  }
  return res;
}

inline std::string join_rule(const std::vector<double>& rule) {
  std::string s;
  for (double v : rule) s += (s.empty() ? "" : ";") + format_real(v);
  return s;
}

inline RunResult run_moral_hazard(const RunConfig& cfg, const RunOptions& o) {
  RunResult res;
  const auto g = welfare_gap(cfg.contract);
  if (o.format == OutputFormat::json) {
    Json j{{"subcommand", "moral-hazard"},
           {"agent_utility", cfg.contract.agent_utility.describe()},
           {"principal_utility", cfg.contract.principal_utility.describe()},
           {"ic_ties", "principal"},
           {"first_best", g.first_best},
           {"second_best", g.second_best},
           {"gap", g.gap},
           {"effort_change", g.effort_change},
           {"effort_independent", effort_independent(cfg.contract)}};
    res.output = dump(j);
  } else {
    CsvWriter w({"kind", "effort", "principal_value", "agent_value", "exact", "rule", "gap",
                 "effort_change"});
    for (const auto* s : {&g.first_best, &g.second_best}) {
      CsvWriter::Row r;
      r << to_string(s->kind) << static_cast<unsigned long long>(s->effort)
        << s->principal_value << s->agent_value << s->exact << join_rule(s->rule) << g.gap
        << g.effort_change;
      w.add(r);
    }
    res.output = w.str();
  }
  return res;
}

}  // namespace detail

/// Runs one parsed config. Solver failures become exit codes; the output
/// still carries whatever diagnostics were available.
inline RunResult execute(RunConfig cfg, const RunOptions& o) {
  if (o.tol) cfg.solver.tol = *o.tol;
  if (o.seed) cfg.three.seed = *o.seed;
  else cfg.three.seed = cfg.seed;
  try {
    switch (cfg.subcommand) {
      case Subcommand::solve: return detail::run_solve(cfg, o);
      case Subcommand::sweep: return detail::run_sweep(cfg, o);
      case Subcommand::tree: return detail::run_tree(cfg, o);
      case Subcommand::simulate: return detail::run_simulate(cfg, o);
      case Subcommand::welfare: return detail::run_welfare(cfg, o);
      case Subcommand::screening: return detail::run_screening(cfg, o);
      case Subcommand::moral_hazard: return detail::run_moral_hazard(cfg, o);
    }
  } catch (const NoConvergence& e) {
    RunResult r;
    r.exit_code = 2;
    r.message = e.what();
    CsvWriter diag({"residual", "value"});
    for (std::size_t k = 0; k < e.best_residuals().size(); ++k) {
      CsvWriter::Row row;
      row << "residual_" + std::to_string(k) << e.best_residuals()[k];
      diag.add(row);
    }
    if (o.format == OutputFormat::json) {
      Json j = detail::base_json(cfg);
      j["status"] = "no_convergence";
      j["message"] = e.what();
      j["best_residuals"] = detail::jnums(e.best_residuals());
      r.output = detail::dump(j);
    } else {
      r.output = diag.str();
    }
    return r;
  } catch (const DegenerateSystem& e) {
    RunResult r;
    r.exit_code = 2;
    r.message = e.what();
    return r;
  } catch (const Error& e) {
    RunResult r;
    r.exit_code = 1;
    r.message = e.what();
    return r;
  }
  return {1, "", "", "unknown subcommand"};
}

}  // namespace labmarket
