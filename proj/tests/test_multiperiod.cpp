#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <random>
#include <vector>

#include "labmarket/multiperiod.hpp"

namespace labmarket {
namespace {

const auto kUnit = ProductivityDistribution::uniform(0, 1);

// Piecewise-constant density on [0,1] written out by hand.
struct Piece {
  double a, b, c;
};
using Density = std::vector<Piece>;

double mass(const Density& d) {
  double s = 0;
  for (const auto& p : d) s += p.b > p.a ? p.c * (p.b - p.a) : 0.0;
  return s;
}
double first(const Density& d) {
  double s = 0;
  for (const auto& p : d) s += p.b > p.a ? p.c * (p.b * p.b - p.a * p.a) / 2 : 0.0;
  return s;
}
double mean(const Density& d) { return first(d) / mass(d); }

// Splits d at t: below leaves, above leaves w.p. mu.
Density leave(const Density& d, double t, double mu) {
  Density out;
  for (const auto& p : d) {
    out.push_back({p.a, std::min(p.b, std::max(p.a, t)), p.c});
    out.push_back({std::max(p.a, std::min(p.b, t)), p.b, p.c * mu});
  }
  return out;
}
Density stay(const Density& d, double t, double mu) {
  Density out;
  for (const auto& p : d) out.push_back({std::max(p.a, std::min(p.b, t)), p.b, p.c * (1 - mu)});
  return out;
}

using Wages = std::array<double, 5>;  // w0, w1, w+, w2, w2'

// Damped iteration on all five equations jointly.
std::optional<Wages> oracle(double mu, Wages x, int max_iter = 5000) {
  const Density n{{0, 1, 1}};
  for (int it = 0; it < max_iter; ++it) {
    for (double& v : x) v = std::clamp(v, 0.0, 0.999);
    const auto [w0, w1, wp, w2, w2p] = x;
    const Density l = leave(n, wp, mu), s = stay(n, wp, mu);
    const Density sl = leave(s, w2, mu), ss = stay(s, w2, mu);
    const Density ll = leave(l, w2p, mu), ls = stay(l, w2p, mu);
    Wages y;
    y[3] = mean(sl);
    y[4] = mean(ll);
    y[1] = (first(l) + first(ls) - mass(ls) * w2p) / mass(l);
    y[2] = w1 + w2p - w2;
    y[0] = (first(n) + first(s) - mass(s) * wp + first(ss) - mass(ss) * w2) / mass(n);
    double delta = 0;
    for (int k = 0; k < 5; ++k) {
      delta = std::max(delta, std::abs(y[k] - x[k]));
      x[k] += 0.5 * (y[k] - x[k]);
    }
    if (delta < 1e-14) return x;
  }
  return std::nullopt;
}

TEST(MarketTree, StructureSmallN) {
  EXPECT_EQ(canonical_histories(1), (std::vector<std::string>{""}));
  EXPECT_EQ(canonical_histories(3),
            (std::vector<std::string>{"", "S", "L", "SS", "SL", "LS", "LL"}));
  const std::array<double, 3> t{0.3, 0.6, 0.2};
  const auto tree = build_market_tree(kUnit, QuitFactor(0.5), 3, t);
  ASSERT_EQ(tree.nodes().size(), 7u);
  EXPECT_EQ(tree.off_firm_count(), 3u);
  EXPECT_EQ(tree.at("S").threshold, 0.6);
  EXPECT_EQ(tree.at("L").threshold, 0.2);
  EXPECT_TRUE(tree.at("LS").terminal());
  EXPECT_EQ(tree.nodes()[tree.at("SL").parent].history, "S");
  EXPECT_NEAR(tree.at("L").mass, 0.3 + 0.5 * 0.7, 1e-15);
  EXPECT_NEAR(tree.at("SS").mass, 0.25 * 0.4, 1e-15);
  EXPECT_THROW(tree.at("SSS"), OutOfRange);
  const auto one = build_market_tree(kUnit, QuitFactor(0.5), 1, {});
  EXPECT_EQ(one.nodes().size(), 1u);
  EXPECT_EQ(one.off_firm_count(), 0u);
}

TEST(MarketTree, ThresholdCountValidated) {
  const std::array<double, 2> two{0.1, 0.2};
  EXPECT_THROW(build_market_tree(kUnit, QuitFactor(0.5), 3, two), InvalidThreshold);
  const std::array<double, 1> nan{kNaN};
  EXPECT_THROW(build_market_tree(kUnit, QuitFactor(0.5), 2, nan), InvalidThreshold);
  EXPECT_THROW(canonical_histories(0), InvalidArgument);
}

TEST(MarketTree, SubmarketCount) {
  for (int n = 1; n <= 6; ++n) {
    EXPECT_EQ(submarket_count(n), (std::size_t{1} << (n - 1)) - 1) << n;
    const std::array<double, 1> t{0.4};
    const auto tree = build_market_tree(kUnit, QuitFactor(0.3), n,
                                        n > 1 ? std::span<const double>(t)
                                              : std::span<const double>());
    EXPECT_EQ(tree.off_firm_count(), submarket_count(n));
  }
  EXPECT_EQ(submarket_count(5), 15u);
}

TEST(MarketTree, MassConservation) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0, 1);
  const std::vector<ProductivityDistribution> dists{
      kUnit, ProductivityDistribution::discrete({{0.1, 3}, {0.5, 2}, {0.9, 5}}),
      ProductivityDistribution::piecewise_linear({{0, 1}, {0.4, 3}, {1, 0.2}})};
  for (const auto& d : dists) {
    for (int rep = 0; rep < 10; ++rep) {
      std::vector<double> t(decision_node_count(5));
      for (double& v : t) v = u(rng);
      const auto tree = build_market_tree(d, QuitFactor(u(rng)), 5, t);
      for (const auto& node : tree.nodes()) {
        if (node.terminal()) continue;
        const double kids = tree.nodes()[node.stay_child].mass +
                            tree.nodes()[node.leave_child].mass;
        EXPECT_NEAR(kids, node.mass, 1e-10);
      }
    }
  }
}

TEST(ThreePeriod, MatchesDampedOracle) {
  for (double mu : {0.2, 0.5, 0.8}) {
    const auto s = solve_three_period(kUnit, QuitFactor(mu));
    EXPECT_TRUE(s.converged);
    EXPECT_LE(s.max_abs_residual(), 1e-8);
    EXPECT_FALSE(s.multi_equilibrium);
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> u(0, 1);
    for (int start = 0; start < 64; ++start) {
      const auto o = oracle(mu, {u(rng), u(rng), u(rng), u(rng), u(rng)});
      ASSERT_TRUE(o.has_value()) << "mu=" << mu << " start=" << start;
      const auto w = s.wages();
      for (int k = 0; k < 5; ++k) EXPECT_NEAR((*o)[k], w[k], 1e-9) << k;
    }
  }
}

TEST(ThreePeriod, FrozenValues) {
  const auto s = solve_three_period(kUnit, QuitFactor(0.5));
  EXPECT_NEAR(s.w0, 0.655514, 1e-6);
  EXPECT_NEAR(s.w1, 0.509104, 1e-6);
  EXPECT_NEAR(s.w_plus, 0.271330, 1e-6);
  EXPECT_NEAR(s.w2, 0.573155, 1e-6);
  EXPECT_NEAR(s.w2p, 0.335381, 1e-6);
  EXPECT_NEAR(s.theta_bar_second, 0.422243, 1e-6);
  EXPECT_NEAR(s.theta_bar_q1, 0.635665, 1e-6);
  EXPECT_NEAR(s.theta_bar_q2, 0.786578, 1e-6);
  EXPECT_NEAR(s.w1 + s.w2p, s.w_plus + s.w2, 1e-12);
}

TEST(ThreePeriod, ConsistentWithTree) {
  const auto s = solve_three_period(kUnit, QuitFactor(0.3));
  const auto t = three_period_thresholds(s);
  const auto tree = build_market_tree(kUnit, QuitFactor(0.3), 3, t);
  EXPECT_NEAR(tree.at("SL").mean, s.w2, 1e-9);
  EXPECT_NEAR(tree.at("LL").mean, s.w2p, 1e-9);
  EXPECT_NEAR(tree.at("L").mean, s.theta_bar_second, 1e-12);
  EXPECT_NEAR(tree.at("SS").mean, s.theta_bar_q2, 1e-12);
  EXPECT_NEAR(tree.at("SS").mass, s.masses.q_second, 1e-15);
}

TEST(ThreePeriod, NearFullQuitLimit) {
  const auto s = solve_three_period(kUnit, QuitFactor(0.999));
  EXPECT_NEAR(s.w0, 0.5, 5e-3);
  EXPECT_NEAR(s.w1, 0.5, 5e-3);
  EXPECT_NEAR(s.w2p, 0.5, 5e-3);
  // The stayer branch remains truncated at w+ even as its mass vanishes.
  EXPECT_NEAR(s.w_plus, 1.0 / 3.0, 5e-3);
  EXPECT_NEAR(s.w2, 2.0 / 3.0, 5e-3);
}

TEST(ThreePeriod, PointMassPaysTheta) {
  const auto d = ProductivityDistribution::discrete({{0.7, 10}});
  const auto s = solve_three_period(d, QuitFactor(0.4));
  for (double w : s.wages()) EXPECT_NEAR(w, 0.7, 1e-12);
}

TEST(ThreePeriod, RejectsDegenerateMu) {
  EXPECT_THROW(solve_three_period(kUnit, QuitFactor(0.0)), InvalidArgument);
  EXPECT_THROW(solve_three_period(kUnit, QuitFactor(1.0)), InvalidArgument);
}

TEST(ThreePeriod, NonUniformAgainstTreeResiduals) {
  const auto d = ProductivityDistribution::piecewise_linear({{0, 0.5}, {0.6, 2}, {1, 1}});
  const auto s = solve_three_period(d, QuitFactor(0.4));
  EXPECT_LE(s.max_abs_residual(), 1e-8);
  const auto tree = build_market_tree(d, QuitFactor(0.4), 3, three_period_thresholds(s));
  EXPECT_NEAR(tree.at("SL").mean, s.w2, 1e-8);
  EXPECT_NEAR(tree.at("LL").mean, s.w2p, 1e-8);
}

TEST(ThreePeriodOrdering, HoldsAcrossMu) {
  for (int k = 1; k <= 9; ++k) {
    const double mu = k / 10.0;
    const auto s = solve_three_period(kUnit, QuitFactor(mu));
    EXPECT_TRUE(check_third_period_ordering(s).holds_strictly()) << mu;
    const auto r = check_stayer_underpayment(s);
    EXPECT_TRUE(r.holds_strictly()) << mu;
    ASSERT_EQ(r.informational.size(), 2u);
    // The direct w+ < w2' link only holds for larger mu.
    EXPECT_EQ(r.informational[0].strict(), mu > 0.25) << mu;
  }
}

TEST(TruncatedTwoPeriod, ReproducesTwoPeriodSolve) {
  for (int k = 1; k <= 9; ++k) {
    const QuitFactor mu(k / 10.0);
    const auto a = solve_two_period(kUnit, mu);
    const auto b = solve_truncated_two_period(kUnit, mu);
    EXPECT_NEAR(a.w0, b.w0, 1e-8);
    EXPECT_NEAR(a.w1, b.w1, 1e-8);
    EXPECT_NEAR(a.theta_bar2, b.theta_bar2, 1e-8);
    EXPECT_LE(std::abs(b.residual_zero_profit), 1e-9);
  }
}

TEST(MultiStart, AgreesAndIsScheduleIndependent) {
  ThreePeriodOptions serial;
  ThreePeriodOptions threaded;
  threaded.jobs = 4;
  const auto a = multistart_three_period(kUnit, QuitFactor(0.5), {}, serial);
  const auto b = multistart_three_period(kUnit, QuitFactor(0.5), {}, threaded);
  EXPECT_TRUE(a.agree);
  EXPECT_LE(a.max_spread, 1e-6);
  ASSERT_EQ(a.runs.size(), 64u);
  ASSERT_EQ(b.runs.size(), 64u);
  for (std::size_t i = 0; i < a.runs.size(); ++i) {
    EXPECT_EQ(a.runs[i].start, b.runs[i].start);
    EXPECT_EQ(a.runs[i].solution.wages(), b.runs[i].solution.wages());
  }
  const auto s = solve_three_period(kUnit, QuitFactor(0.5));
  EXPECT_NEAR(a.runs.front().solution.w_plus, s.w_plus, 1e-9);
}

TEST(Welfare, PointMassHasNoDifference) {
  const auto d = ProductivityDistribution::discrete({{0.7, 10}});
  const auto r = welfare_comparison(d, QuitFactor(0.4), {}, {}, 20);
  ASSERT_EQ(r.deciles.size(), 10u);
  for (const auto& row : r.deciles) {
    EXPECT_NEAR(row.difference, 0.0, 1e-12);
    EXPECT_NEAR(row.two_period_shortfall, 0.0, 1e-12);
  }
}

TEST(Welfare, ExpectedPerPeriodWageEqualsEntryMean) {
  for (double mu : {0.2, 0.5, 0.8}) {
    const auto r = welfare_comparison(kUnit, QuitFactor(mu), {}, {}, 50);
    for (const auto& row : r.deciles) {
      EXPECT_NEAR(row.two_period_wage, 0.5, 1e-9);
      EXPECT_NEAR(row.three_period_wage, 0.5, 1e-9);
      EXPECT_NEAR(row.difference, 0.0, 1e-9);
    }
    EXPECT_GT(r.deciles.back().two_period_shortfall, 0.0);
    EXPECT_LT(r.deciles.front().two_period_shortfall, 0.0);
    EXPECT_NEAR(r.stayer_path_three - r.path_two,
                r.three.w0 + r.three.w_plus + r.three.w2 - 1.0, 1e-12);
  }
}

}  // namespace
}  // namespace labmarket
