// Acceptance run: one PASS/FAIL line per criterion, with timings.
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "labmarket/moral_hazard.hpp"
#include "labmarket/multiperiod.hpp"
#include "labmarket/screening.hpp"
#include "labmarket/simulator.hpp"

using namespace labmarket;

namespace {

struct Outcome {
  bool pass = true;
  // A failure that is exactly a documented false claim, not a defect.
  bool known = false;
  std::string detail;
};

const auto kUnit = ProductivityDistribution::uniform(0, 1);

std::string fmt(double v) { return format_real(v); }

Outcome two_period_equilibrium() {
  Outcome o;
  std::vector<std::string> ordering_failures;
  bool other = true;
  for (int k = 1; k <= 9; ++k) {
    const double mu = k / 10.0;
    const auto s = solve_two_period(kUnit, QuitFactor(mu));
    const double closed = (std::sqrt(mu) - mu) / (1.0 - mu);
    if (std::abs(s.w1 - closed) > 1e-9) {
      other = false;
      o.detail += " w1(mu=" + fmt(mu) + ") off by " + fmt(s.w1 - closed) + ";";
    }
    if (k == 5 && std::abs(s.w1 - (std::sqrt(2.0) - 1.0)) > 1e-9) other = false;
    if (k == 5 && std::abs(s.w0 - 0.585786) > 1e-6) {
      other = false;
      o.detail += " w0(0.5) = " + fmt(s.w0) + ";";
    }
    const auto r = check_two_period_ordering(s);
    if (!r.claims[0].strict() || !r.claims[1].strict()) {
      other = false;
      o.detail += " w1 < theta_bar < w0 broken at mu=" + fmt(mu) + ";";
    }
    if (!r.claims[2].strict()) {
      ordering_failures.push_back(fmt(mu));
      o.detail += " w0=" + fmt(s.w0) + " >= theta_bar2=" + fmt(s.theta_bar2) +
                  " at mu=" + fmt(mu) + ";";
    }
  }
  o.pass = other && ordering_failures.empty();
  // For uniform[0,1] w0 + w1 = 1, so w0 < theta_bar2 iff mu > 1/4.
  o.known = other && ordering_failures == std::vector<std::string>{"0.1", "0.2"};
  if (o.known) o.detail += " (w0 < theta_bar2 holds iff mu > 1/4 for this pool)";
  if (o.pass) o.detail = " w1 = sqrt(2)-1, w0 = 0.585786, strict ordering for mu = 0.1..0.9";
  return o;
}

Outcome collapse_without_quits() {
  Outcome o;
  for (double lo : {0.0, -0.5, -1.0, -2.0}) {
    const auto r = secondhand_fixed_point(ProductivityDistribution::uniform(lo, 1.0), QuitFactor(0.0));
    if (!r.collapsed || r.wage != 0.0) {
      o.pass = false;
      o.detail += " uniform(" + fmt(lo) + ",1): wage " + fmt(r.wage) + ";";
    }
  }
  if (o.pass) o.detail = " wage 0, collapsed, for theta_L in {0,-0.5,-1,-2}";
  return o;
}

Outcome three_period_system() {
  Outcome o;
  double worst_res = 0, worst_spread = 0, worst_trunc = 0;
  for (double mu : {0.2, 0.5, 0.8}) {
    const QuitFactor q(mu);
    const auto s = solve_three_period(kUnit, q);
    worst_res = std::max(worst_res, s.max_abs_residual());
    ThreePeriodOptions t;
    t.seed = 12345;
    t.jobs = std::max(1u, std::thread::hardware_concurrency());
    const auto ms = multistart_three_period(kUnit, q, {}, t);
    worst_spread = std::max(worst_spread, ms.max_spread);
    if (!ms.agree || ms.runs.size() != 64) {
      o.pass = false;
      o.detail += " multistart disagrees at mu=" + fmt(mu) + ";";
    }
    if (!check_third_period_ordering(s).holds_strictly() ||
        !check_stayer_underpayment(s).holds_strictly()) {
      o.pass = false;
      o.detail += " ordering suite fails at mu=" + fmt(mu) + ";";
    }
  }
  for (int k = 1; k <= 9; ++k) {
    const QuitFactor q(k / 10.0);
    const auto a = solve_two_period(kUnit, q);
    const auto b = solve_truncated_two_period(kUnit, q);
    worst_trunc = std::max({worst_trunc, std::abs(a.w0 - b.w0), std::abs(a.w1 - b.w1)});
  }
  if (worst_res > 1e-8) o.pass = false;
  if (worst_trunc > 1e-8) o.pass = false;
  o.detail += " max residual " + fmt(worst_res) + ", multistart spread " + fmt(worst_spread) +
              ", two-period reduction gap " + fmt(worst_trunc);
  return o;
}

Outcome market_tree() {
  Outcome o;
  for (int n = 1; n <= 6; ++n) {
    const std::vector<double> t(decision_node_count(n), 0.5);
    const auto tree = build_market_tree(kUnit, QuitFactor(0.5), n, t);
    const std::size_t formula = (std::size_t{1} << (n - 1)) - 1;
    if (tree.off_firm_count() != formula || submarket_count(n) != formula) {
      o.pass = false;
      o.detail += " n=" + std::to_string(n) + ";";
    }
  }
  if (o.pass) o.detail = " off-firm markets = 2^(n-1) - 1 for n = 1..6 (0,1,3,7,15,31)";
  return o;
}

Outcome monte_carlo() {
  Outcome o;
  const unsigned jobs = std::max(1u, std::thread::hardware_concurrency());
  const QuitFactor mu(0.5);
  double worst_z = 0;
  auto check = [&](const SimulationReport& r, const MarketTree& tree) {
    for (const auto& m : r.markets) {
      const double se = m.sd / std::sqrt(static_cast<double>(m.count));
      const double z = std::abs(m.mean - tree.at(m.history).mean) / se;
      worst_z = std::max(worst_z, z);
      if (!(z <= 3.0)) {
        o.pass = false;
        o.detail += " market '" + m.history + "' z=" + fmt(z) + ";";
      }
    }
  };
  const auto two = solve_two_period(kUnit, mu);
  auto c2 = simulation_config(kUnit, two, 1'000'000, 20240601);
  c2.jobs = jobs;
  const auto r2 = simulate(c2);
  const std::array<double, 1> t2{two.w1};
  check(r2, build_market_tree(kUnit, mu, 2, t2));
  const auto three = solve_three_period(kUnit, mu);
  auto c3 = simulation_config(kUnit, three, 1'000'000, 20240601);
  c3.jobs = jobs;
  const auto r3 = simulate(c3);
  check(r3, build_market_tree(kUnit, mu, 3, three_period_thresholds(three)));
  if (!(std::abs(r2.firm_profit) < 0.005)) o.pass = false;
  o.detail += " max |z| " + fmt(worst_z) + " over " + std::to_string(r2.markets.size() + r3.markets.size()) +
              " markets, two-period profit per capita " + fmt(r2.firm_profit);
  return o;
}

// Slice-by-slice screening replayed on an even grid of types.
double brute_screening(int m, int n) {
  const int types = 100000;
  int kept = 0, kept_below = 0;
  for (int i = 0; i < types; ++i) {
    const double theta = (i + 0.5) / types;
    const int slice = std::min(n - 1, static_cast<int>(theta * n));
    const bool fired = slice < m && theta < 0.5;
    if (fired) continue;
    ++kept;
    kept_below += theta < 0.5;
  }
  return static_cast<double>(kept_below) / kept;
}

Outcome screening() {
  Outcome o;
  ScreeningConfig a{6, 3, 0.0, 1.0, StraddlePolicy::fire_below_average_part};
  ScreeningConfig b{10, 3, 0.0, 1.0, StraddlePolicy::fire_below_average_part};
  const double pa = residual_below_average_probability(a);
  const double pb = residual_below_average_probability(b);
  const double ba = brute_screening(3, 6), bb = brute_screening(3, 10);
  if (pa != 0.0 || std::abs(ba) > 1e-3) o.pass = false;
  if (std::abs(pb - 2.0 / 7.0) > 1e-12 || std::abs(pb - bb) > 1e-3) o.pass = false;
  if (critical_assessment_periods(3) != 6) o.pass = false;
  o.detail = " P(3,6) = " + fmt(pa) + " (sim " + fmt(ba) + "), P(3,10) = " + fmt(pb) +
             " (sim " + fmt(bb) + "), critical periods(3) = " +
             std::to_string(critical_assessment_periods(3));
  return o;
}

ContractProblem random_instance(std::mt19937_64& rng, bool independent) {
  std::uniform_real_distribution<double> u(0, 1);
  std::uniform_int_distribution<int> dim(2, 3);
  ContractProblem p;
  const int k = dim(rng), efforts = dim(rng);
  double x = 0;
  for (int i = 0; i < k; ++i) p.outcomes.push_back(x += 0.5 + 2 * u(rng));
  for (int a = 0; a < efforts; ++a) p.effort_costs.push_back(0.4 * u(rng));
  std::sort(p.effort_costs.begin(), p.effort_costs.end());
  for (int a = 0; a < efforts; ++a) {
    if (independent && a > 0) {
      p.density.push_back(p.density[0]);
      continue;
    }
    std::vector<double> f(k);
    double s = 0;
    for (double& v : f) s += v = 0.05 + u(rng);
    double acc = 0;
    for (int i = 0; i + 1 < k; ++i) acc += f[i] /= s;
    f[k - 1] = 1.0 - acc;
    p.density.push_back(f);
  }
  p.agent_utility = Utility::square_root();
  p.reservation = 0.2 + 0.6 * u(rng);
  p.wage_grid = make_wage_grid(0.0, p.outcomes.back(), 25);
  return p;
}

// Exhaustive search over every grid rule and effort.
double enumerate(const ContractProblem& p, bool incentive, bool& found) {
  const std::size_t k = p.outcomes.size(), levels = p.wage_grid.size();
  std::size_t total = 1;
  for (std::size_t i = 0; i < k; ++i) total *= levels;
  double best = 0;
  found = false;
  std::vector<double> rule(k);
  for (std::size_t code = 0; code < total; ++code) {
    std::size_t c = code;
    for (std::size_t x = 0; x < k; ++x, c /= levels) rule[x] = p.wage_grid[c % levels];
    std::vector<double> ua(p.effort_costs.size());
    for (std::size_t a = 0; a < ua.size(); ++a) {
      double v = 0;
      for (std::size_t x = 0; x < k; ++x) v += p.density[a][x] * p.agent_utility(rule[x]);
      ua[a] = v - p.effort_costs[a];
    }
    const double top = *std::max_element(ua.begin(), ua.end());
    for (std::size_t a = 0; a < ua.size(); ++a) {
      if (ua[a] < p.reservation - 1e-12 || (incentive && ua[a] < top - 1e-12)) continue;
      double v = 0;
      for (std::size_t x = 0; x < k; ++x) v += p.density[a][x] * (p.outcomes[x] - rule[x]);
      if (!found || v > best) best = v;
      found = true;
    }
  }
  return best;
}

Outcome moral_hazard() {
  Outcome o;
  std::mt19937_64 rng(2024);
  int negative = 0, mismatched = 0, indep = 0, indep_zero = 0, dep = 0, dep_positive = 0;
  for (int i = 0; i < 100; ++i) {
    const bool independent = i % 4 == 0;
    const auto p = random_instance(rng, independent);
    bool f1 = false, f2 = false;
    const double e1 = enumerate(p, false, f1), e2 = enumerate(p, true, f2);
    if (!f1) {
      try {
        solve_first_best(p);
        ++mismatched;
      } catch (const Infeasible&) {
      }
      continue;
    }
    const auto g = welfare_gap(p);
    if (g.first_best.principal_value != e1 && std::abs(g.first_best.principal_value - e1) > 1e-12) ++mismatched;
    if (!f2 || (g.second_best.principal_value != e2 && std::abs(g.second_best.principal_value - e2) > 1e-12)) ++mismatched;
    if (g.gap < 0) ++negative;
    if (independent) {
      ++indep;
      indep_zero += g.gap == 0.0;
    } else {
      ++dep;
      dep_positive += g.gap > 0.0;
    }
  }
  const bool forward = negative == 0 && mismatched == 0 && indep_zero == indep;
  o.pass = forward && dep_positive == dep;
  o.known = forward && dep_positive < dep;
  o.detail = " gap >= 0 on all, enumeration mismatches " + std::to_string(mismatched) +
             ", gap = 0 on " + std::to_string(indep_zero) + "/" + std::to_string(indep) +
             " effort-independent, gap > 0 on only " + std::to_string(dep_positive) + "/" +
             std::to_string(dep) + " effort-dependent";
  if (o.known) {
    o.detail += " (converse false with finite efforts: cheapest effort optimal or grid rule already incentive compatible)";
  }
  return o;
}

int run_cli(const std::string& args) {
  const int status = std::system((std::string(LABMARKET_CLI) + " " + args + " 2>/dev/null").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream s;
  s << f.rdbuf();
  return s.str();
}

Outcome determinism() {
  Outcome o;
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / ("labmarket_accept_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  const std::vector<std::tuple<std::string, std::string, std::string>> cases{
      {"solve", "three", "dist = uniform(0,1)\nmu = 0.5\nregime = three_period\nseed = 9\n"},
      {"sweep", "sweep", "dist = uniform(0,1)\nmu_grid = 0.2, 0.5, 0.8\nregime = three_period\nstarts = 8\n"},
      {"simulate", "sim", "dist = uniform(0,1)\nmu = 0.5\nregime = three_period\nn_agents = 300000\nstarts = 0\n"},
      {"welfare", "welfare", "dist = uniform(0,1)\nmu = 0.3\n"},
      {"moral-hazard", "mh", "outcomes = 0, 4\neffort_costs = 0, 0.5\ndensity = (0.8,0.2);(0.2,0.8)\nreservation = 0.5\n"}};
  int files = 0;
  for (const auto& [sub, name, text] : cases) {
    const fs::path cfg = dir / (name + ".txt");
    std::ofstream(cfg) << text;
    for (const char* format : {"csv", "json"}) {
      std::string first;
      for (const char* jobs : {"1", "1", "3"}) {
        const fs::path out = dir / (name + "_" + jobs + "." + format);
        const int rc = run_cli(sub + " --config " + cfg.string() + " --format " + format +
                               " --seed 42 --jobs " + jobs + " --out " + out.string());
        const std::string got = slurp(out);
        if (rc != 0 || got.empty()) {
          o.pass = false;
          o.detail += " " + sub + " exited " + std::to_string(rc) + ";";
        }
        if (first.empty()) first = got;
        if (got != first) {
          o.pass = false;
          o.detail += " " + sub + " " + format + " differs at --jobs " + jobs + ";";
        }
        ++files;
      }
    }
  }
  fs::remove_all(dir);
  if (o.pass) o.detail = " " + std::to_string(files) + " outputs byte-identical across reruns and --jobs 1/3";
  return o;
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double limit_s;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {1, "two-period equilibrium and ordering", 1.0, two_period_equilibrium},
      {2, "collapse without random quits", 1.0, collapse_without_quits},
      {3, "three-period system", 30.0, three_period_system},
      {4, "market tree count", 1.0, market_tree},
      {5, "Monte Carlo oracle", 60.0, monte_carlo},
      {6, "gradual screening", 5.0, screening},
      {7, "moral hazard gap", 30.0, moral_hazard},
      {8, "byte determinism", 10.0, determinism},
  };
  int passed = 0, known = 0, unexpected = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.known = false;
      o.detail = std::string(" threw: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (secs > c.limit_s) {
      o.pass = false;
      o.known = false;
      o.detail += " (over the " + fmt(c.limit_s) + " s limit)";
    }
    char time_buf[32];
    std::snprintf(time_buf, sizeof time_buf, "%.2fs", secs);
    std::cout << (o.pass ? "PASS" : "FAIL") << " [" << c.id << "] " << c.name << " (" << time_buf
              << "):" << o.detail << "\n";
    if (o.pass) ++passed;
    else if (o.known) ++known;
    else ++unexpected;
  }
  std::cout << passed << " passed, " << known + unexpected << " failed (" << known
            << " on claims shown false above, " << unexpected << " unexplained)\n";
  return unexpected == 0 ? 0 : 1;
}
