#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "labmarket/equilibrium.hpp"
#include "labmarket/multiperiod.hpp"
#include "labmarket/rng.hpp"

namespace labmarket {

enum class Regime { two_period, three_period };

inline const char* to_string(Regime r) {
  return r == Regime::two_period ? "two_period" : "three_period";
}
inline int regime_periods(Regime r) { return r == Regime::two_period ? 2 : 3; }

struct SimulationConfig {
  std::uint64_t n_agents = 1'000'000;
  std::uint64_t seed = 0;
  Regime regime = Regime::two_period;
  ProductivityDistribution dist = ProductivityDistribution::uniform(0, 1);
  double mu = 0.5;
  /// Retention threshold per decision market, canonical order ("", S, L).
  std::vector<double> thresholds;
  /// Wage per market in canonical order; may be empty (no profit figures).
  std::vector<double> wages;
  unsigned jobs = 1;

  void validate() const {
    if (n_agents < 1) throw InvalidArgument("n_agents must be >= 1");
    QuitFactor{mu};
    const int n = regime_periods(regime);
    if (thresholds.size() != decision_node_count(n)) {
      throw InvalidThreshold("expected " + std::to_string(decision_node_count(n)) +
                             " thresholds for " + to_string(regime));
    }
    if (!wages.empty() && wages.size() != canonical_histories(n).size()) {
      throw InvalidArgument("expected " + std::to_string(canonical_histories(n).size()) +
                            " wages for " + to_string(regime));
    }
  }
};

inline SimulationConfig simulation_config(const ProductivityDistribution& dist,
                                          const TwoPeriodSolution& s,
                                          std::uint64_t n_agents, std::uint64_t seed) {
  SimulationConfig c;
  c.n_agents = n_agents;
  c.seed = seed;
  c.regime = Regime::two_period;
  c.dist = dist;
  c.mu = s.mu;
  c.thresholds = {s.w1};
  c.wages = two_period_node_wages(s);
  return c;
}

inline SimulationConfig simulation_config(const ProductivityDistribution& dist,
                                          const ThreePeriodSolution& s,
                                          std::uint64_t n_agents, std::uint64_t seed) {
  SimulationConfig c;
  c.n_agents = n_agents;
  c.seed = seed;
  c.regime = Regime::three_period;
  c.dist = dist;
  c.mu = s.mu;
  c.thresholds = three_period_thresholds(s);
  c.wages = three_period_node_wages(s);
  return c;
}

struct SimulatedMarket {
  std::string history;
  std::uint64_t count = 0;
  double share = 0.0;  ///< count / n_agents
  double mean = kNaN;  ///< NaN when nobody is in the market
  double sd = kNaN;
  double halfwidth = kNaN;  ///< 95% normal half-width of the mean
  double wage = kNaN;
  /// Wage at which the employer hiring here breaks even given the wages it
  /// pays later to the workers it keeps. NaN for non-hiring markets.
  double break_even = kNaN;
  double profit_per_capita = kNaN;  ///< sum(theta - wage) / n_agents
};

struct SimulationReport {
  std::uint64_t n_agents = 0;
  std::uint64_t seed = 0;
  Regime regime = Regime::two_period;
  std::vector<SimulatedMarket> markets;
  /// Entry employer's profit over all periods, per entry hire.
  double firm_profit = kNaN;
  double firm_profit_halfwidth = kNaN;

  const SimulatedMarket& at(std::string_view history) const {
    for (const auto& m : markets) {
      if (m.history == history) return m;
    }
    throw OutOfRange("no market with history '" + std::string(history) + "'");
  }
};

namespace detail {

/// Count, mean and centered second moment; merged with Chan's update.
struct RunningStats {
  std::uint64_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    ++n;
    const double d = x - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (x - mean);
  }
  void merge(const RunningStats& o) {
    if (o.n == 0) return;
    if (n == 0) {
      *this = o;
      return;
    }
    const double na = static_cast<double>(n), nb = static_cast<double>(o.n);
    const double d = o.mean - mean;
    const double tot = na + nb;
    mean += d * nb / tot;
    m2 += o.m2 + d * d * na * nb / tot;
    n += o.n;
  }
  double variance() const { return n > 1 ? m2 / static_cast<double>(n - 1) : 0.0; }
};

struct BlockStats {
  std::vector<RunningStats> theta;  // per market
  RunningStats firm;                // entry employer profit per hire
};

inline constexpr std::uint64_t kBlock = 65536;

struct Route {
  std::vector<std::string> histories;
  std::vector<int> stay, leave;
  std::vector<double> thresholds;
};

inline Route make_route(const SimulationConfig& cfg) {
  Route r;
  r.histories = canonical_histories(regime_periods(cfg.regime));
  const std::size_t n = r.histories.size();
  r.stay.assign(n, -1);
  r.leave.assign(n, -1);
  r.thresholds.assign(n, kNaN);
  for (std::size_t i = 0; i < cfg.thresholds.size(); ++i) {
    r.stay[i] = static_cast<int>(2 * i + 1);
    r.leave[i] = static_cast<int>(2 * i + 2);
    r.thresholds[i] = cfg.thresholds[i];
  }
  return r;
}

// Entry-employer markets: the root and every all-'S' history.
inline bool entry_employer(const std::string& h) {
  return std::all_of(h.begin(), h.end(), [](char c) { return c == kStayed; });
}

}  // namespace detail

struct AgentTrace {
  double theta = 0.0;
  std::string history;
  std::vector<int> markets;  ///< market index per period
};

/// Replays one worker: productivity from stream 0, period-p quit from stream p+1.
inline AgentTrace trace_agent(const SimulationConfig& cfg, std::uint64_t agent) {
  const detail::Route route = detail::make_route(cfg);
  AgentTrace t;
  t.theta = cfg.dist.quantile(counter_uniform(cfg.seed, agent, 0));
  int node = 0;
  t.markets.push_back(node);
  while (route.stay[static_cast<std::size_t>(node)] >= 0) {
    const auto i = static_cast<std::size_t>(node);
    const std::uint64_t period = route.histories[i].size();
    const bool leaves = t.theta < route.thresholds[i] ||
                        counter_uniform(cfg.seed, agent, period + 1) < cfg.mu;
    node = leaves ? route.leave[i] : route.stay[i];
    t.markets.push_back(node);
  }
  t.history = route.histories[static_cast<std::size_t>(node)];
  return t;
}

inline SimulationReport simulate(const SimulationConfig& cfg) {
  cfg.validate();
  const detail::Route route = detail::make_route(cfg);
  const std::size_t markets = route.histories.size();
  const bool priced = !cfg.wages.empty();
  std::vector<char> entry(markets);
  for (std::size_t i = 0; i < markets; ++i) {
    entry[i] = detail::entry_employer(route.histories[i]);
  }

  const std::uint64_t blocks = (cfg.n_agents + detail::kBlock - 1) / detail::kBlock;
  std::vector<detail::BlockStats> partial(blocks);
  detail::parallel_for(blocks, cfg.jobs, [&](std::size_t b) {
    detail::BlockStats& s = partial[b];
    s.theta.assign(markets, {});
    const std::uint64_t lo = b * detail::kBlock;
    const std::uint64_t hi = std::min(cfg.n_agents, lo + detail::kBlock);
    for (std::uint64_t agent = lo; agent < hi; ++agent) {
      const double theta = cfg.dist.quantile(counter_uniform(cfg.seed, agent, 0));
      double firm = 0.0;
      std::size_t node = 0;
      std::uint64_t period = 0;
      while (true) {
        s.theta[node].add(theta);
        if (priced && entry[node]) firm += theta - cfg.wages[node];
        if (route.stay[node] < 0) break;
        const bool leaves = theta < route.thresholds[node] ||
                            counter_uniform(cfg.seed, agent, period + 1) < cfg.mu;
        node = static_cast<std::size_t>(leaves ? route.leave[node] : route.stay[node]);
        ++period;
      }
      if (priced) s.firm.add(firm);
    }
  });

  detail::BlockStats total;
  total.theta.assign(markets, {});
  for (const auto& s : partial) {
    for (std::size_t i = 0; i < markets; ++i) total.theta[i].merge(s.theta[i]);
    total.firm.merge(s.firm);
  }

  SimulationReport r;
  r.n_agents = cfg.n_agents;
  r.seed = cfg.seed;
  r.regime = cfg.regime;
  const double n = static_cast<double>(cfg.n_agents);
  for (std::size_t i = 0; i < markets; ++i) {
    const auto& st = total.theta[i];
    SimulatedMarket m;
    m.history = route.histories[i];
    m.count = st.n;
    m.share = static_cast<double>(st.n) / n;
    if (st.n > 0) {
      m.mean = st.mean;
      m.sd = std::sqrt(st.variance());
      m.halfwidth = 1.96 * m.sd / std::sqrt(static_cast<double>(st.n));
    }
    if (priced) {
      m.wage = cfg.wages[i];
      m.profit_per_capita = static_cast<double>(st.n) * (st.mean - m.wage) / n;
    }
    r.markets.push_back(m);
  }
  if (priced) {
    // Break-even: the hiring market's output plus the kept workers' output
    // net of their later wages, spread over the hires.
    for (std::size_t i = 0; i < markets; ++i) {
      const std::string& h = route.histories[i];
      const bool hiring = h.empty() || h.back() == kLeft;
      if (!hiring || r.markets[i].count == 0) continue;
      double net = static_cast<double>(r.markets[i].count) * r.markets[i].mean;
      for (std::size_t j = 0; j < markets; ++j) {
        const std::string& g = route.histories[j];
        if (g.size() <= h.size() || g.compare(0, h.size(), h) != 0) continue;
        if (!detail::entry_employer(g.substr(h.size()))) continue;
        const auto& mj = r.markets[j];
        if (mj.count > 0) net += static_cast<double>(mj.count) * (mj.mean - mj.wage);
      }
      r.markets[i].break_even = net / static_cast<double>(r.markets[i].count);
    }
    r.firm_profit = total.firm.mean;
    r.firm_profit_halfwidth =
        1.96 * std::sqrt(total.firm.variance()) / std::sqrt(n);
  }
  return r;
}

/// Entry employer's simulated profit per hire at the configured wages.
inline double empirical_zero_profit(const SimulationConfig& cfg) {
  if (cfg.wages.empty()) throw InvalidArgument("zero-profit check needs wages");
  return simulate(cfg).firm_profit;
}

}  // namespace labmarket
