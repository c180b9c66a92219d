#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "labmarket/comparison.hpp"
#include "labmarket/equilibrium.hpp"
#include "labmarket/error.hpp"
#include "labmarket/pool.hpp"
#include "labmarket/roots.hpp"

namespace labmarket {

inline constexpr char kStayed = 'S';
inline constexpr char kLeft = 'L';

/// A sub-market identified by its employment history: one letter per elapsed
/// period, 'S' for stayed with the current employer and 'L' for left.
struct MarketNode {
  std::string history;
  int period = 0;  ///< 0-based period in which these workers are employed
  LaborPool pool;
  double mass = 0.0;
  double mean = kNaN;       ///< NaN for an empty market
  double wage = kNaN;       ///< wage paid in this period, when known
  double threshold = kNaN;  ///< retention threshold at period end; NaN if terminal
  int parent = -1;
  int stay_child = -1;
  int leave_child = -1;

  bool terminal() const noexcept { return stay_child < 0; }
  /// Workers here were hired on an outside market this period.
  bool off_firm() const noexcept {
    return !history.empty() && history.back() == kLeft;
  }
  /// Workers here were newly hired (entry market or an off-firm market).
  bool hiring() const noexcept { return history.empty() || off_firm(); }
};

/// Histories of an n-period regime in breadth-first order, 'S' before 'L'.
/// Non-terminal nodes (length < n - 1) come first.
inline std::vector<std::string> canonical_histories(int n_periods) {
  if (n_periods < 1) throw InvalidArgument("n_periods must be >= 1");
  if (n_periods > 24) throw OutOfRange("n_periods above 24 is not enumerable");
  std::vector<std::string> out{""};
  std::size_t begin = 0;
  for (int len = 1; len < n_periods; ++len) {
    const std::size_t end = out.size();
    for (std::size_t i = begin; i < end; ++i) {
      out.push_back(out[i] + kStayed);
      out.push_back(out[i] + kLeft);
    }
    begin = end;
  }
  return out;
}

/// Number of markets that retention decisions act on: 2^(n-1) - 1.
inline std::size_t decision_node_count(int n_periods) {
  return (std::size_t{1} << (n_periods - 1)) - 1;
}

class MarketTree {
 public:
  MarketTree(int periods, std::vector<MarketNode> nodes)
      : periods_(periods), nodes_(std::move(nodes)) {}

  int periods() const noexcept { return periods_; }
  const std::vector<MarketNode>& nodes() const noexcept { return nodes_; }
  const MarketNode& root() const { return nodes_.front(); }

  const MarketNode& at(std::string_view history) const {
    for (const MarketNode& n : nodes_) {
      if (n.history == history) return n;
    }
    throw OutOfRange("no market with history '" + std::string(history) + "'");
  }

  std::size_t off_firm_count() const {
    return static_cast<std::size_t>(std::count_if(
        nodes_.begin(), nodes_.end(),
        [](const MarketNode& n) { return n.off_firm(); }));
  }

 private:
  int periods_;
  std::vector<MarketNode> nodes_;
};

/// Builds every sub-market of an n-period regime by replaying firing_split
/// from the entry pool. `thresholds` gives one retention threshold per
/// non-terminal node in canonical order (a single value is broadcast);
/// `wages`, when non-empty, gives one wage per node in canonical order.
inline MarketTree build_market_tree(const ProductivityDistribution& dist,
                                    QuitFactor mu, int n_periods,
                                    std::span<const double> thresholds,
                                    std::span<const double> wages = {}) {
  const std::vector<std::string> histories = canonical_histories(n_periods);
  const std::size_t decisions = decision_node_count(n_periods);
  if (!(thresholds.size() == decisions ||
        (thresholds.size() == 1 && decisions > 0) ||
        (decisions == 0 && thresholds.empty()))) {
    throw InvalidThreshold("expected " + std::to_string(decisions) +
                           " thresholds, got " +
                           std::to_string(thresholds.size()));
  }
  if (!wages.empty() && wages.size() != histories.size()) {
    throw InvalidArgument("expected " + std::to_string(histories.size()) +
                          " wages, got " + std::to_string(wages.size()));
  }
  for (double t : thresholds) {
    if (!std::isfinite(t)) throw InvalidThreshold("threshold must be finite");
  }

  std::vector<MarketNode> nodes;
  nodes.reserve(histories.size());
  const LaborPool root_pool(dist);
  nodes.push_back(MarketNode{"", 0, root_pool});
  for (std::size_t i = 0; i < histories.size(); ++i) {
    MarketNode& node = nodes[i];
    node.mass = pool_mass(node.pool);
    node.mean = node.mass > 0.0 ? pool_mean(node.pool) : kNaN;
    if (!wages.empty()) node.wage = wages[i];
    if (node.history.size() + 1 >= static_cast<std::size_t>(n_periods)) continue;

    const double t = thresholds.size() == 1 ? thresholds[0] : thresholds[i];
    node.threshold = t;
    FiringSplit split = firing_split(node.pool, t, mu);
    const double stay_mass = pool_mass(split.stayers);
    const double leave_mass = pool_mass(split.leavers);
    if (stay_mass < 0.0 || leave_mass < 0.0) {
      throw InvalidThreshold("threshold produced a negative-mass pool");
    }
    const int parent = static_cast<int>(i);
    const int period = node.period + 1;
    const std::string history = node.history;
    nodes[i].stay_child = static_cast<int>(nodes.size());
    nodes.push_back(MarketNode{history + kStayed, period, std::move(split.stayers)});
    nodes.back().parent = parent;
    nodes[i].leave_child = static_cast<int>(nodes.size());
    nodes.push_back(MarketNode{history + kLeft, period, std::move(split.leavers)});
    nodes.back().parent = parent;
  }
  return MarketTree(n_periods, std::move(nodes));
}

/// Off-firm sub-market count for an n-period regime, by enumerating the
/// histories that end in a departure.
inline std::size_t submarket_count(int n_periods) {
  const auto histories = canonical_histories(n_periods);
  return static_cast<std::size_t>(std::count_if(
      histories.begin(), histories.end(), [](const std::string& h) {
        return !h.empty() && h.back() == kLeft;
      }));
}

/// Residual slots of the three-period system.
enum ThreePeriodResidual : std::size_t {
  kThirdMarketFixedPoint = 0,   ///< w2 - M2(w2)
  kDoubleSecondFixedPoint = 1,  ///< w2' - M2'(w2')
  kStayerIndifference = 2,      ///< w1 + w2' - w+ - w2
  kEntryZeroProfit = 3,
  kSecondMarketZeroProfit = 4,
};

struct ThreePeriodMasses {
  double n_entry = 0.0;          ///< N
  double n_second = 0.0;         ///< N1: period-1 leavers
  double q_first = 0.0;          ///< Q1: period-1 stayers
  double n_third = 0.0;          ///< N2: stayers leaving after period 2
  double q_second = 0.0;         ///< Q2: with the entry employer for period 3
  double n_double_second = 0.0;  ///< N2': second-market hires leaving again
  double q_double_second = 0.0;  ///< Q2': second-market hires kept for period 3
};

struct ThreePeriodSolution {
  double mu = 0.0;
  double w0 = kNaN;
  double w1 = kNaN;
  double w_plus = kNaN;
  double w2 = kNaN;
  double w2p = kNaN;
  double theta_bar = kNaN;         ///< entry pool mean
  double theta_bar_second = kNaN;  ///< second market (period-1 leavers) mean
  double theta_bar_q1 = kNaN;      ///< period-1 stayers mean
  double theta_bar_q2 = kNaN;      ///< mean of workers kept through period 2
  std::array<double, 5> residuals{kNaN, kNaN, kNaN, kNaN, kNaN};
  ThreePeriodMasses masses;
  /// The same masses with a single quit/survival factor per branch (no
  /// compounding across periods), for comparison with tree-derived values.
  ThreePeriodMasses single_factor_masses;
  std::vector<double> w_plus_roots;
  bool multi_equilibrium = false;
  bool w_plus_negative = false;
  bool converged = false;

  double max_abs_residual() const {
    double m = 0.0;
    for (double r : residuals) m = std::max(m, std::abs(r));
    return m;
  }
  std::array<double, 5> wages() const { return {w0, w1, w_plus, w2, w2p}; }
};

struct ThreePeriodOptions {
  int outer_scan_points = 256;  ///< grid intervals over w+ in [theta_L, theta_H]
  int starts = 64;              ///< multi-start count
  std::uint64_t seed = 0;
  double damping = 0.5;
  int damped_iterations = 400;
  unsigned jobs = 1;
  double agreement_tol = 1e-6;
};

namespace detail {

/// Everything implied by a candidate stayer wage w+.
struct StayerWageState {
  double w_plus;
  double w1;
  double w2;
  double w2p;
  double gap;  ///< w1 + w2' - w2 - w+
};

inline std::optional<StayerWageState> evaluate_stayer_wage(
    const LaborPool& entry, QuitFactor mu, double w_plus,
    const SolverOptions& opts) {
  const FiringSplit first = firing_split(entry, w_plus, mu);
  if (!(pool_mass(first.stayers) > 0.0) || !(pool_mass(first.leavers) > 0.0)) {
    return std::nullopt;
  }
  const FixedPointResult third = market_fixed_point(first.stayers, mu, opts);
  const FixedPointResult dsecond = market_fixed_point(first.leavers, mu, opts);
  if (third.collapsed || dsecond.collapsed) return std::nullopt;

  // Second-market employer: hires at w1, keeps those above w2' at w2'.
  const LaborPool& second = first.leavers;
  const LaborPool kept = second.rescaled(dsecond.wage, 0.0, 1.0 - mu.value());
  const double w1 = (second.moment(1) + kept.moment(1) -
                     kept.moment(0) * dsecond.wage) /
                    second.moment(0);
  StayerWageState s{w_plus, w1, third.wage, dsecond.wage, 0.0};
  s.gap = w1 + s.w2p - s.w2 - w_plus;
  return s;
}

inline ThreePeriodMasses single_factor_masses(const ProductivityDistribution& d,
                                              double mu, double w_plus,
                                              double w2, double w2p) {
  const double lo = d.support_low();
  const double hi = d.support_high();
  auto n = [&](double a, double b) { return d.moment(0, a, b, b >= hi); };
  ThreePeriodMasses m;
  m.n_entry = n(lo, hi);
  m.n_second = n(lo, w_plus) + mu * n(w_plus, hi);
  m.q_first = (1.0 - mu) * n(w_plus, hi);
  m.n_third = (1.0 - mu) * n(w_plus, hi) - (1.0 - mu) * n(w2, hi);
  m.q_second = (1.0 - mu) * n(w2, hi);
  m.q_double_second = (1.0 - mu) * n(w2p, hi);
  m.n_double_second = n(lo, w_plus) - (1.0 - mu) * n(w2p, hi);
  return m;
}

}  // namespace detail

inline std::vector<double> three_period_thresholds(const ThreePeriodSolution& s) {
  return {s.w_plus, s.w2, s.w2p};
}

/// Wages per market in canonical order: "", S, L, SS, SL, LS, LL.
inline std::vector<double> three_period_node_wages(const ThreePeriodSolution& s) {
  return {s.w0, s.w_plus, s.w1, s.w2, s.w2, s.w2p, s.w2p};
}

inline std::vector<double> two_period_node_wages(const TwoPeriodSolution& s) {
  return {s.w0, s.w1, s.w1};
}

/// Fills in every derived quantity for a given stayer wage.
inline ThreePeriodSolution assemble_three_period(
    const ProductivityDistribution& dist, QuitFactor mu,
    const detail::StayerWageState& st) {
  ThreePeriodSolution s;
  s.mu = mu.value();
  s.w1 = st.w1;
  s.w_plus = st.w_plus;
  s.w2 = st.w2;
  s.w2p = st.w2p;
  const std::array<double, 3> thresholds{st.w_plus, st.w2, st.w2p};
  const MarketTree tree = build_market_tree(dist, mu, 3, thresholds);
  const MarketNode& root = tree.root();
  const MarketNode& stay = tree.at("S");
  const MarketNode& second = tree.at("L");
  const MarketNode& ss = tree.at("SS");
  const MarketNode& sl = tree.at("SL");
  const MarketNode& ls = tree.at("LS");
  const MarketNode& ll = tree.at("LL");

  // Entry employer breaks even over all three periods.
  s.w0 = (root.pool.moment(1) + stay.pool.moment(1) - stay.mass * s.w_plus +
          ss.pool.moment(1) - ss.mass * s.w2) /
         root.mass;

  s.theta_bar = root.mean;
  s.theta_bar_second = second.mean;
  s.theta_bar_q1 = stay.mean;
  s.theta_bar_q2 = ss.mean;
  s.masses = {root.mass, second.mass, stay.mass, sl.mass,
              ss.mass,   ll.mass,     ls.mass};
  s.single_factor_masses = detail::single_factor_masses(
      dist, mu.value(), s.w_plus, s.w2, s.w2p);

  s.residuals[kThirdMarketFixedPoint] = s.w2 - m_operator(stay.pool, s.w2, mu);
  s.residuals[kDoubleSecondFixedPoint] =
      s.w2p - m_operator(second.pool, s.w2p, mu);
  s.residuals[kStayerIndifference] = s.w1 + s.w2p - s.w_plus - s.w2;
  s.residuals[kEntryZeroProfit] =
      (root.pool.moment(1) - root.mass * s.w0) +
      (stay.pool.moment(1) - stay.mass * s.w_plus) +
      (ss.pool.moment(1) - ss.mass * s.w2);
  s.residuals[kSecondMarketZeroProfit] =
      (second.pool.moment(1) - second.mass * s.w1) +
      (ls.pool.moment(1) - ls.mass * s.w2p);
  s.w_plus_negative = s.w_plus < 0.0;
  return s;
}

/// Solves the three-period system. The third-market and double-second
/// fixed points are solved exactly given w+, w1 and w0 follow from the two
/// zero-profit conditions, and the stayer indifference condition is the
/// remaining scalar equation in w+, bracketed over the support.
inline ThreePeriodSolution solve_three_period(
    const ProductivityDistribution& dist, QuitFactor mu,
    const SolverOptions& opts = {}, const ThreePeriodOptions& topts = {}) {
  if (!(mu.value() > 0.0 && mu.value() < 1.0)) {
    throw InvalidArgument("three-period solving needs 0 < mu < 1");
  }
  const LaborPool entry(dist);
  auto gap = [&](double w) -> std::optional<double> {
    const auto st = detail::evaluate_stayer_wage(entry, mu, w, opts);
    if (!st) return std::nullopt;
    return st->gap;
  };
  SolverOptions outer = opts;
  outer.scan_points = topts.outer_scan_points;
  const RootScan scan =
      scan_roots(gap, dist.support_low(), dist.support_high(), outer);
  if (scan.roots.empty()) {
    if (!std::isfinite(scan.best_abs_residual)) {
      throw DegenerateSystem("every candidate stayer wage empties a market");
    }
    throw NoConvergence("no stayer wage satisfies the indifference condition",
                        {scan.best_abs_residual});
  }
  const double w_plus = scan.roots.back();
  const auto st = detail::evaluate_stayer_wage(entry, mu, w_plus, opts);
  if (!st) throw DegenerateSystem("a market emptied at the solved stayer wage");
  ThreePeriodSolution s = assemble_three_period(dist, mu, *st);
  s.w_plus_roots = scan.roots;
  s.multi_equilibrium = scan.roots.size() > 1;
  const double scale = std::max(1.0, s.masses.n_entry *
                                         (dist.support_high() - dist.support_low()));
  s.converged = std::abs(s.residuals[kThirdMarketFixedPoint]) <= opts.tol &&
                std::abs(s.residuals[kDoubleSecondFixedPoint]) <= opts.tol &&
                std::abs(s.residuals[kStayerIndifference]) <= opts.tol &&
                std::abs(s.residuals[kEntryZeroProfit]) <= opts.tol * scale &&
                std::abs(s.residuals[kSecondMarketZeroProfit]) <= opts.tol * scale;
  if (!s.converged) {
    std::vector<double> res(s.residuals.begin(), s.residuals.end());
    throw NoConvergence("three-period residuals above tolerance", res);
  }
  return s;
}

/// One multi-start run: damped outer updates w+ <- w+ + damping * gap(w+)
/// from a random start, then a local bracket polished by bisection.
struct MultiStartRun {
  double start = kNaN;
  bool converged = false;
  ThreePeriodSolution solution;
};

struct MultiStartResult {
  std::vector<MultiStartRun> runs;  ///< sorted by residual norm, then wages
  bool agree = false;               ///< all converged runs within agreement_tol
  double max_spread = kNaN;         ///< largest wage spread across runs
};

namespace detail {

inline MultiStartRun run_one_start(const ProductivityDistribution& dist,
                                   QuitFactor mu, double start,
                                   const SolverOptions& opts,
                                   const ThreePeriodOptions& topts) {
  MultiStartRun run;
  run.start = start;
  const LaborPool entry(dist);
  const double lo = dist.support_low();
  const double hi = dist.support_high();
  auto eval = [&](double w) { return evaluate_stayer_wage(entry, mu, w, opts); };

  double w = start;
  std::optional<StayerWageState> st = eval(w);
  for (int i = 0; i < 64 && !st; ++i) {
    w = lo + 0.5 * (w - lo);
    st = eval(w);
  }
  if (!st) return run;
  for (int it = 0; it < topts.damped_iterations; ++it) {
    const double next = std::clamp(w + topts.damping * st->gap, lo, hi);
    if (std::abs(next - w) <= 1e-13) break;
    auto ns = eval(next);
    if (!ns) break;
    w = next;
    st = ns;
  }
  // Polish: expand a bracket around w and bisect.
  auto g = [&](double x) -> std::optional<double> {
    auto s = eval(x);
    if (!s) return std::nullopt;
    return s->gap;
  };
  double step = 1e-9 * std::max(1.0, hi - lo);
  double a = w, b = w;
  std::optional<double> ga = st->gap, gb = st->gap;
  bool bracketed = st->gap == 0.0;
  for (int i = 0; i < 80 && !bracketed; ++i) {
    const double na = std::max(lo, w - step);
    const double nb = std::min(hi, w + step);
    const auto gna = g(na);
    const auto gnb = g(nb);
    if (gna && (*gna < 0.0) != (st->gap < 0.0)) {
      a = na; ga = gna; b = w; gb = st->gap;
      bracketed = true;
    } else if (gnb && (*gnb < 0.0) != (st->gap < 0.0)) {
      a = w; ga = st->gap; b = nb; gb = gnb;
      bracketed = true;
    }
    step *= 2.0;
  }
  if (!bracketed) return run;
  double root = w;
  if (a != b) {
    root = bisect(g, a, b, *ga, opts);
    const auto gr = g(root);
    const auto gn = g(std::nextafter(root, b));
    if (gn && (!gr || std::abs(*gn) < std::abs(*gr))) root = std::nextafter(root, b);
  }
  const auto fin = eval(root);
  if (!fin) return run;
  run.solution = assemble_three_period(dist, mu, *fin);
  run.converged = run.solution.max_abs_residual() <= std::max(1e-8, opts.tol);
  run.solution.converged = run.converged;
  return run;
}

template <class F>
void parallel_for(std::size_t n, unsigned jobs, const F& f) {
  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(n)));
  if (jobs <= 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(jobs);
  for (unsigned t = 0; t < jobs; ++t) {
    pool.emplace_back([&, t] {
      for (std::size_t i = t; i < n; i += jobs) f(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace detail

/// Runs topts.starts seeded random initializations of the stayer wage.
/// Output order is independent of scheduling.
inline MultiStartResult multistart_three_period(
    const ProductivityDistribution& dist, QuitFactor mu,
    const SolverOptions& opts = {}, const ThreePeriodOptions& topts = {}) {
  if (!(mu.value() > 0.0 && mu.value() < 1.0)) {
    throw InvalidArgument("three-period solving needs 0 < mu < 1");
  }
  std::mt19937_64 rng(topts.seed);
  std::uniform_real_distribution<double> unif(dist.support_low(),
                                              dist.support_high());
  std::vector<double> starts(static_cast<std::size_t>(std::max(0, topts.starts)));
  for (double& s : starts) s = unif(rng);

  MultiStartResult out;
  out.runs.resize(starts.size());
  detail::parallel_for(starts.size(), topts.jobs, [&](std::size_t i) {
    out.runs[i] = detail::run_one_start(dist, mu, starts[i], opts, topts);
  });
  std::stable_sort(out.runs.begin(), out.runs.end(),
                   [](const MultiStartRun& a, const MultiStartRun& b) {
                     if (a.converged != b.converged) return a.converged;
                     const double ra = a.solution.max_abs_residual();
                     const double rb = b.solution.max_abs_residual();
                     if (ra != rb) return ra < rb;
                     return a.solution.wages() < b.solution.wages();
                   });
  out.max_spread = 0.0;
  bool any = false;
  for (const auto& r : out.runs) {
    if (!r.converged) continue;
    any = true;
    const auto w = r.solution.wages();
    const auto ref = out.runs.front().solution.wages();
    for (std::size_t k = 0; k < w.size(); ++k) {
      out.max_spread = std::max(out.max_spread, std::abs(w[k] - ref[k]));
    }
  }
  out.agree = any &&
              std::all_of(out.runs.begin(), out.runs.end(),
                          [](const MultiStartRun& r) { return r.converged; }) &&
              out.max_spread <= topts.agreement_tol;
  return out;
}

/// The two-period regime recovered from the multi-period machinery: the
/// second market is terminal, the stayer wage is pinned to w1, and only the
/// entry zero-profit condition remains alongside w1 = M(w1).
inline TwoPeriodSolution solve_truncated_two_period(
    const ProductivityDistribution& dist, QuitFactor mu,
    const SolverOptions& opts = {}) {
  const LaborPool entry(dist);
  const FixedPointResult fp = market_fixed_point(entry, mu, opts);
  TwoPeriodSolution s;
  s.mu = mu.value();
  s.collapsed = fp.collapsed;
  s.w1 = fp.wage;
  s.roots = fp.roots;
  const std::array<double, 1> thresholds{s.w1};
  const MarketTree tree = build_market_tree(dist, mu, 2, thresholds);
  const MarketNode& root = tree.root();
  const MarketNode& stay = tree.at("S");
  const MarketNode& left = tree.at("L");
  s.n_mass = root.mass;
  s.q_mass = stay.mass;
  s.theta_bar = root.mean;
  s.theta_bar2 = stay.mean;
  s.w0 = (root.pool.moment(1) + stay.pool.moment(1) - stay.mass * s.w1) / root.mass;
  s.residual_fixed_point = left.mass > 0.0 ? s.w1 - left.mean : kNaN;
  s.residual_zero_profit = (root.pool.moment(1) - root.mass * s.w0) +
                           (stay.pool.moment(1) - stay.mass * s.w1);
  s.entry_collapsed = s.w0 < 0.0;
  return s;
}

/// w2' < w2 < theta_bar_Q2.
inline InequalityReport check_third_period_ordering(const ThreePeriodSolution& s,
                                              double tol = 1e-9) {
  InequalityReport r;
  r.claims.push_back(compare_less("w2p", s.w2p, "w2", s.w2, tol));
  r.claims.push_back(
      compare_less("w2", s.w2, "theta_bar_q2", s.theta_bar_q2, tol));
  return r;
}

/// Stayer underpayment claims. The second-market mean plays the role of the
/// pool average in the second market's own two-period ordering. The direct
/// w+ < w2' link is reported but not judged.
inline InequalityReport check_stayer_underpayment(const ThreePeriodSolution& s,
                                              double tol = 1e-9) {
  InequalityReport r;
  r.claims.push_back(compare_less("w_plus", s.w_plus, "w1", s.w1, tol));
  r.claims.push_back(
      compare_less("w2p", s.w2p, "theta_bar_second", s.theta_bar_second, tol));
  r.claims.push_back(
      compare_less("theta_bar_second", s.theta_bar_second, "w1", s.w1, tol));
  r.claims.push_back(
      compare_less("w_plus", s.w_plus, "theta_bar_second", s.theta_bar_second, tol));
  r.claims.push_back(compare_less("theta_bar_second", s.theta_bar_second,
                                  "theta_bar_q2", s.theta_bar_q2, tol));
  r.informational.push_back(compare_less("w_plus", s.w_plus, "w2p", s.w2p, tol));
  r.informational.push_back(
      compare_less("w_plus", s.w_plus, "theta_bar_q1", s.theta_bar_q1, tol));
  return r;
}

/// Expected wage path of a worker of productivity theta through a solved
/// regime: mean and standard deviation of the lifetime wage sum.
struct PathMoments {
  double mean = 0.0;
  double sd = 0.0;
};

inline PathMoments expected_path(const MarketTree& tree, double theta,
                                 double mu) {
  double m1 = 0.0;
  double m2 = 0.0;
  struct Frame {
    int node;
    double prob;
    double sum;
  };
  std::vector<Frame> stack{{0, 1.0, 0.0}};
  while (!stack.empty()) {
    const Frame f = stack.back();
    stack.pop_back();
    const MarketNode& n = tree.nodes()[static_cast<std::size_t>(f.node)];
    const double sum = f.sum + n.wage;
    if (n.terminal()) {
      m1 += f.prob * sum;
      m2 += f.prob * sum * sum;
      continue;
    }
    const double leave = theta < n.threshold ? 1.0 : mu;
    if (leave > 0.0) stack.push_back({n.leave_child, f.prob * leave, sum});
    if (leave < 1.0) stack.push_back({n.stay_child, f.prob * (1.0 - leave), sum});
  }
  return {m1, std::sqrt(std::max(0.0, m2 - m1 * m1))};
}

struct WelfareRow {
  int decile = 0;  ///< 1..10
  double theta_mean = 0.0;
  double two_period_wage = 0.0;    ///< expected wage per period
  double three_period_wage = 0.0;
  double difference = 0.0;         ///< three minus two
  double two_period_shortfall = 0.0;  ///< theta minus expected wage per period
  double three_period_shortfall = 0.0;
  double two_period_path_sd = 0.0;  ///< sd of the lifetime wage sum
  double three_period_path_sd = 0.0;
};

struct WelfareReport {
  double mu = 0.0;
  TwoPeriodSolution two;
  ThreePeriodSolution three;
  std::vector<WelfareRow> deciles;
  double aggregate_two = 0.0;
  double aggregate_three = 0.0;
  double aggregate_difference = 0.0;
  /// Stayer path w0 + w+ + w2 against the two-period path w0 + w1.
  double stayer_path_three = 0.0;
  double path_two = 0.0;
  double stayer_path_difference = 0.0;
};

/// Lifetime wages by productivity decile under the two- and three-period
/// regimes, per period of each regime's horizon (no discounting).
inline WelfareReport welfare_comparison(const ProductivityDistribution& dist,
                                        QuitFactor mu,
                                        const SolverOptions& opts = {},
                                        const ThreePeriodOptions& topts = {},
                                        int samples_per_decile = 200) {
  WelfareReport r;
  r.mu = mu.value();
  r.two = solve_two_period(dist, mu, opts);
  r.three = solve_three_period(dist, mu, opts, topts);

  const std::array<double, 1> t2{r.two.w1};
  const auto w2 = two_period_node_wages(r.two);
  const MarketTree tree2 = build_market_tree(dist, mu, 2, t2, w2);
  const auto t3 = three_period_thresholds(r.three);
  const auto w3 = three_period_node_wages(r.three);
  const MarketTree tree3 = build_market_tree(dist, mu, 3, t3, w3);

  for (int d = 0; d < 10; ++d) {
    WelfareRow row;
    row.decile = d + 1;
    double th = 0.0, a2 = 0.0, a3 = 0.0, s2 = 0.0, s3 = 0.0;
    for (int k = 0; k < samples_per_decile; ++k) {
      const double u = (d + (k + 0.5) / samples_per_decile) / 10.0;
      const double theta = dist.quantile(u);
      const PathMoments p2 = expected_path(tree2, theta, mu.value());
      const PathMoments p3 = expected_path(tree3, theta, mu.value());
      th += theta;
      a2 += p2.mean / 2.0;
      a3 += p3.mean / 3.0;
      s2 += p2.sd;
      s3 += p3.sd;
    }
    const double n = samples_per_decile;
    row.theta_mean = th / n;
    row.two_period_wage = a2 / n;
    row.three_period_wage = a3 / n;
    row.difference = row.three_period_wage - row.two_period_wage;
    row.two_period_shortfall = row.theta_mean - row.two_period_wage;
    row.three_period_shortfall = row.theta_mean - row.three_period_wage;
    row.two_period_path_sd = s2 / n;
    row.three_period_path_sd = s3 / n;
    r.aggregate_two += row.two_period_wage / 10.0;
    r.aggregate_three += row.three_period_wage / 10.0;
    r.deciles.push_back(row);
  }
  r.aggregate_difference = r.aggregate_three - r.aggregate_two;
  r.stayer_path_three = r.three.w0 + r.three.w_plus + r.three.w2;
  r.path_two = r.two.w0 + r.two.w1;
  r.stayer_path_difference = r.stayer_path_three - r.path_two;
  return r;
}

}  // namespace labmarket
