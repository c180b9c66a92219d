#include <gtest/gtest.h>

#include <cmath>

#include "labmarket/simulator.hpp"

namespace labmarket {
namespace {

const auto kUnit = ProductivityDistribution::uniform(0, 1);

TEST(Rng, CounterUniformIsStableAndInRange) {
  EXPECT_EQ(counter_uniform(1, 2, 3), counter_uniform(1, 2, 3));
  EXPECT_NE(counter_uniform(1, 2, 3), counter_uniform(1, 2, 4));
  EXPECT_NE(counter_uniform(1, 2, 3), counter_uniform(2, 2, 3));
  double s = 0;
  for (std::uint64_t i = 0; i < 100000; ++i) {
    const double u = counter_uniform(9, i, 0);
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    s += u;
  }
  EXPECT_NEAR(s / 100000, 0.5, 0.005);
}

TEST(Simulator, SecondHandMeanMatchesFixedPoint) {
  const auto sol = solve_two_period(kUnit, QuitFactor(0.5));
  const auto r = simulate(simulation_config(kUnit, sol, 1'000'000, 11));
  EXPECT_NEAR(r.at("L").mean, 0.414214, 0.01);
  EXPECT_NEAR(r.at("L").break_even, sol.w1, 0.01);
  EXPECT_NEAR(r.at("").break_even, sol.w0, 0.01);
  EXPECT_LT(std::abs(r.firm_profit), 0.005);
  EXPECT_EQ(r.at("S").count + r.at("L").count, r.n_agents);
  EXPECT_EQ(r.at("").count, r.n_agents);
}

TEST(Simulator, NoQuitsLeavesOnlyLowTypes) {
  SimulationConfig c;
  c.n_agents = 200'000;
  c.mu = 0.0;
  c.thresholds = {0.5};
  const auto r = simulate(c);
  EXPECT_NEAR(r.at("L").mean, 0.25, 3 * r.at("L").halfwidth);
  EXPECT_NEAR(r.at("L").share, 0.5, 0.01);
  EXPECT_TRUE(std::isnan(r.firm_profit));
}

TEST(Simulator, SingleAgentIsReproducible) {
  SimulationConfig c;
  c.n_agents = 1;
  c.seed = 77;
  c.regime = Regime::three_period;
  c.mu = 0.5;
  c.thresholds = {0.3, 0.6, 0.2};
  const auto a = simulate(c);
  const auto b = simulate(c);
  ASSERT_EQ(a.markets.size(), b.markets.size());
  for (std::size_t i = 0; i < a.markets.size(); ++i) {
    EXPECT_EQ(a.markets[i].count, b.markets[i].count);
    if (a.markets[i].count) {
      EXPECT_EQ(a.markets[i].mean, b.markets[i].mean);
    } else {
      EXPECT_TRUE(std::isnan(a.markets[i].mean));
    }
  }
  const auto t = trace_agent(c, 0);
  EXPECT_EQ(t.history.size(), 2u);
  EXPECT_EQ(a.at(t.history).count, 1u);
  EXPECT_EQ(a.at(t.history).mean, t.theta);
}

TEST(Simulator, ThreadCountDoesNotChangeResults) {
  const auto sol = solve_three_period(kUnit, QuitFactor(0.5));
  auto c = simulation_config(kUnit, sol, 300'000, 5);
  const auto a = simulate(c);
  c.jobs = 4;
  const auto b = simulate(c);
  for (std::size_t i = 0; i < a.markets.size(); ++i) {
    EXPECT_EQ(a.markets[i].count, b.markets[i].count);
    EXPECT_EQ(a.markets[i].mean, b.markets[i].mean);
    EXPECT_EQ(a.markets[i].sd, b.markets[i].sd);
  }
  EXPECT_EQ(a.firm_profit, b.firm_profit);
}

TEST(Simulator, ThreePeriodMarketsWithinThreeStandardErrors) {
  const QuitFactor mu(0.5);
  const auto sol = solve_three_period(kUnit, mu);
  const auto r = simulate(simulation_config(kUnit, sol, 400'000, 3));
  const auto tree = build_market_tree(kUnit, mu, 3, three_period_thresholds(sol));
  double period_share[3] = {0, 0, 0};
  for (const auto& m : r.markets) {
    const auto& node = tree.at(m.history);
    EXPECT_NEAR(m.mean, node.mean, 3 * m.sd / std::sqrt(double(m.count))) << m.history;
    EXPECT_NEAR(m.share, node.mass, 0.01) << m.history;
    period_share[m.history.size()] += m.share;
  }
  for (double s : period_share) EXPECT_NEAR(s, 1.0, 1e-12);
  EXPECT_LT(std::abs(r.firm_profit), 3 * r.firm_profit_halfwidth / 1.96 + 1e-3);
  EXPECT_NEAR(r.at("L").break_even, sol.w1, 0.02);
}

TEST(Simulator, PointMassProfitIsExactlyZero) {
  const auto d = ProductivityDistribution::discrete({{0.7, 1}});
  const auto sol = solve_two_period(d, QuitFactor(0.3));
  EXPECT_EQ(empirical_zero_profit(simulation_config(d, sol, 10'000, 1)), 0.0);
}

TEST(Simulator, PerturbedEntryWageLosesTheDifference) {
  const auto sol = solve_two_period(kUnit, QuitFactor(0.5));
  auto c = simulation_config(kUnit, sol, 200'000, 2);
  const double base = empirical_zero_profit(c);
  c.wages[0] += 0.1;
  const double bumped = empirical_zero_profit(c);
  EXPECT_NEAR(bumped - base, -0.1, 1e-12);
  EXPECT_NEAR(bumped, -0.1, 0.01);
}

TEST(Simulator, ConfigValidation) {
  SimulationConfig c;
  c.thresholds = {0.1, 0.2};
  EXPECT_THROW(simulate(c), InvalidThreshold);
  c.thresholds = {0.1};
  c.wages = {1.0};
  EXPECT_THROW(simulate(c), InvalidArgument);
  c.wages.clear();
  c.mu = 2.0;
  EXPECT_THROW(simulate(c), InvalidArgument);
}

}  // namespace
}  // namespace labmarket
