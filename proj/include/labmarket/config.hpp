#pragma once

#include <charconv>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "labmarket/distribution.hpp"
#include "labmarket/error.hpp"
#include "labmarket/moral_hazard.hpp"
#include "labmarket/screening.hpp"
#include "labmarket/simulator.hpp"

namespace labmarket {

enum class Subcommand { solve, tree, sweep, simulate, screening, moral_hazard, welfare };

inline const char* to_string(Subcommand s) {
  switch (s) {
    case Subcommand::solve: return "solve";
    case Subcommand::tree: return "tree";
    case Subcommand::sweep: return "sweep";
    case Subcommand::simulate: return "simulate";
    case Subcommand::screening: return "screening";
    case Subcommand::moral_hazard: return "moral-hazard";
    case Subcommand::welfare: return "welfare";
  }
  return "?";
}

enum class SolveRegime { one_period, two_period, three_period };

inline const char* to_string(SolveRegime r) {
  switch (r) {
    case SolveRegime::one_period: return "one_period";
    case SolveRegime::two_period: return "two_period";
    case SolveRegime::three_period: return "three_period";
  }
  return "?";
}

struct ConfigIssue {
  int line = 0;    ///< 1-based; 0 for document-level problems
  int column = 0;  ///< 1-based
  std::string key;
  std::string message;
  bool parse = false;  ///< syntax rather than validation

  std::string describe() const {
    std::string out;
    if (line > 0) out += std::to_string(line) + ":" + std::to_string(column) + ": ";
    out += parse ? "parse error: " : "invalid ";
    if (!parse && !key.empty()) out += key + ": ";
    return out + message;
  }
};

/// Every problem found in a config document.
class ConfigError : public Error {
 public:
  explicit ConfigError(std::vector<ConfigIssue> issues)
      : Error(join(issues)), issues_(std::move(issues)) {}
  const std::vector<ConfigIssue>& issues() const noexcept { return issues_; }

 private:
  static std::string join(const std::vector<ConfigIssue>& issues) {
    std::string s;
    for (const auto& i : issues) {
      if (!s.empty()) s += '\n';
      s += i.describe();
    }
    return s;
  }
  std::vector<ConfigIssue> issues_;
};

struct RunConfig {
  Subcommand subcommand = Subcommand::solve;
  std::optional<SolveRegime> regime;
  std::optional<ProductivityDistribution> dist;
  std::optional<double> mu;
  std::vector<double> mu_grid;
  int n_periods = 0;
  std::vector<double> thresholds;

  SolverOptions solver;
  ThreePeriodOptions three;
  std::uint64_t seed = 0;
  std::uint64_t n_agents = 1'000'000;
  int samples_per_decile = 200;
  double series_low = kNaN;
  double series_high = kNaN;
  int series_points = 201;

  ScreeningConfig screening;
  ContractProblem contract;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::optional<double> parse_real(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

template <class Int>
std::optional<Int> parse_int(std::string_view s) {
  s = trim(s);
  Int v{};
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  int depth = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '(') ++depth;
    if (s[i] == ')') --depth;
    if (s[i] == sep && depth == 0) {
      out.push_back(trim(s.substr(start, i - start)));
      start = i + 1;
    }
  }
  out.push_back(trim(s.substr(start)));
  return out;
}

/// "name(args)" -> args, when the literal has that name.
inline std::optional<std::string_view> call_args(std::string_view s, std::string_view name) {
  s = trim(s);
  if (s.size() < name.size() + 2 || s.substr(0, name.size()) != name) return std::nullopt;
  std::string_view rest = trim(s.substr(name.size()));
  if (rest.size() < 2 || rest.front() != '(' || rest.back() != ')') return std::nullopt;
  return rest.substr(1, rest.size() - 2);
}

inline std::vector<double> parse_reals(std::string_view s, std::string& err) {
  std::vector<double> out;
  for (auto part : split(s, ',')) {
    const auto v = parse_real(part);
    if (!v) {
      err = "expected a number, got '" + std::string(part) + "'";
      return {};
    }
    out.push_back(*v);
  }
  return out;
}

/// "(a,b);(c,d)" -> pairs.
inline std::vector<std::pair<double, double>> parse_pairs(std::string_view s, std::string& err) {
  std::vector<std::pair<double, double>> out;
  for (auto part : split(s, ';')) {
    if (part.size() < 2 || part.front() != '(' || part.back() != ')') {
      err = "expected (a,b), got '" + std::string(part) + "'";
      return {};
    }
    const auto v = parse_reals(part.substr(1, part.size() - 2), err);
    if (!err.empty()) return {};
    if (v.size() != 2) {
      err = "expected exactly two numbers in '" + std::string(part) + "'";
      return {};
    }
    out.emplace_back(v[0], v[1]);
  }
  return out;
}

inline ProductivityDistribution parse_distribution(std::string_view s) {
  std::string err;
  if (auto a = call_args(s, "uniform")) {
    const auto v = parse_reals(*a, err);
    if (!err.empty()) throw InvalidArgument(err);
    if (v.size() != 2) throw InvalidArgument("uniform takes (low, high)");
    return ProductivityDistribution::uniform(v[0], v[1]);
  }
  if (auto a = call_args(s, "discrete")) {
    const auto pairs = parse_pairs(*a, err);
    if (!err.empty()) throw InvalidArgument(err);
    std::vector<Atom> atoms;
    for (auto [t, c] : pairs) atoms.push_back({t, c});
    return ProductivityDistribution::discrete(atoms);
  }
  if (auto a = call_args(s, "pwl")) {
    const auto pairs = parse_pairs(*a, err);
    if (!err.empty()) throw InvalidArgument(err);
    std::vector<DensityPoint> pts;
    for (auto [t, d] : pairs) pts.push_back({t, d});
    return ProductivityDistribution::piecewise_linear(pts);
  }
  throw InvalidArgument("expected uniform(a,b), discrete((theta,count);...) or pwl((theta,density);...)");
}

inline Utility parse_utility(std::string_view s) {
  s = trim(s);
  if (s == "linear") return Utility::linear();
  if (s == "sqrt") return Utility::square_root();
  if (s == "log1p") return Utility::log_one_plus();
  if (auto a = call_args(s, "crra")) {
    const auto g = parse_real(*a);
    if (!g) throw InvalidArgument("crra takes one number");
    return Utility::crra(*g);
  }
  throw InvalidArgument("expected linear, sqrt, log1p or crra(gamma)");
}

/// "a, b, c" or "linspace(lo, hi, count)".
inline std::vector<double> parse_grid(std::string_view s) {
  std::string err;
  if (auto a = call_args(s, "linspace")) {
    const auto v = parse_reals(*a, err);
    if (!err.empty()) throw InvalidArgument(err);
    if (v.size() != 3 || v[2] < 1 || v[2] != std::floor(v[2])) {
      throw InvalidArgument("linspace takes (low, high, count >= 1)");
    }
    const int n = static_cast<int>(v[2]);
    std::vector<double> out(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
      out[static_cast<std::size_t>(k)] =
          n == 1 ? v[0] : (k == n - 1 ? v[1] : v[0] + (v[1] - v[0]) * k / (n - 1));
    }
    return out;
  }
  auto v = parse_reals(s, err);
  if (!err.empty()) throw InvalidArgument(err);
  return v;
}

struct Entry {
  std::string value;
  int line;
  int column;  // of the value
};

inline const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys{
      "dist", "mu", "mu_grid", "regime", "n_periods", "thresholds", "tol", "max_iter",
      "scan_points", "outer_scan_points", "starts", "seed", "n_agents",
      "samples_per_decile", "series_low", "series_high", "series_points", "n_total",
      "m_allowed", "theta_low", "theta_high", "straddle_policy", "outcomes",
      "effort_costs", "density", "agent_utility", "principal_utility", "reservation",
      "wage_low", "wage_high", "wage_levels"};
  return keys;
}

inline std::vector<std::string> required_keys(Subcommand s) {
  switch (s) {
    case Subcommand::solve: return {"dist", "mu", "regime"};
    case Subcommand::tree: return {"dist", "mu", "n_periods"};
    case Subcommand::sweep: return {"dist", "mu_grid", "regime"};
    case Subcommand::simulate: return {"dist", "mu", "regime"};
    case Subcommand::welfare: return {"dist", "mu"};
    case Subcommand::screening: return {"n_total", "m_allowed"};
    case Subcommand::moral_hazard:
      return {"outcomes", "effort_costs", "density", "reservation"};
  }
  return {};
}

}  // namespace detail

/// Parses a flat `key = value` document for one subcommand. All problems are
/// gathered into a single ConfigError.
inline RunConfig parse_config(std::string_view text, Subcommand sub) {
  using namespace detail;
  std::vector<ConfigIssue> issues;
  std::map<std::string, Entry> entries;

  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    std::string_view raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (const auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
    if (trim(raw).empty()) continue;
    const auto eq = raw.find('=');
    const int lead = static_cast<int>(raw.find_first_not_of(" \t")) + 1;
    if (eq == std::string_view::npos) {
      issues.push_back({line_no, lead, "", "expected 'key = value'", true});
      continue;
    }
    const std::string key(trim(raw.substr(0, eq)));
    const std::string_view after = raw.substr(eq + 1);
    const std::string_view value = trim(after);
    const int vcol = static_cast<int>(eq + 1 + after.find_first_not_of(" \t")) + 1;
    if (key.empty()) {
      issues.push_back({line_no, lead, "", "missing key before '='", true});
      continue;
    }
    if (!known_keys().count(key)) {
      issues.push_back({line_no, lead, key, "unknown key", false});
      continue;
    }
    if (value.empty()) {
      issues.push_back({line_no, static_cast<int>(eq) + 2, key, "missing value", true});
      continue;
    }
    if (entries.count(key)) {
      issues.push_back({line_no, lead, key, "duplicate key (first on line " +
                                              std::to_string(entries[key].line) + ")", false});
      continue;
    }
    entries[key] = {std::string(value), line_no, vcol};
  }

  RunConfig cfg;
  cfg.subcommand = sub;
  cfg.contract.wage_grid.clear();

  std::vector<std::string> missing;
  for (const auto& k : required_keys(sub)) {
    if (!entries.count(k)) missing.push_back(k);
  }
  if (!missing.empty()) {
    std::string list;
    for (const auto& k : missing) list += (list.empty() ? "" : ", ") + k;
    for (const auto& k : missing) {
      issues.push_back({0, 0, k, "required key missing (required for " +
                                     std::string(to_string(sub)) + ": " + list + ")", false});
    }
  }

  auto fail = [&](const std::string& key, const std::string& msg) {
    const Entry& e = entries.at(key);
    issues.push_back({e.line, e.column, key, msg, false});
  };
  auto real = [&](const std::string& key, auto&& check, const char* rule) -> std::optional<double> {
    if (!entries.count(key)) return std::nullopt;
    const auto v = parse_real(entries.at(key).value);
    if (!v) {
      fail(key, "expected a number");
      return std::nullopt;
    }
    if (!check(*v)) {
      fail(key, std::string(key) + " must " + rule);
      return std::nullopt;
    }
    return v;
  };
  auto integer = [&](const std::string& key, long long lo, long long hi) -> std::optional<long long> {
    if (!entries.count(key)) return std::nullopt;
    const auto v = parse_int<long long>(entries.at(key).value);
    if (!v) {
      fail(key, "expected an integer");
      return std::nullopt;
    }
    if (*v < lo || *v > hi) {
      fail(key, key + " must lie in [" + std::to_string(lo) + "," + std::to_string(hi) + "]");
      return std::nullopt;
    }
    return v;
  };
  auto guarded = [&](const std::string& key, auto&& f) {
    if (!entries.count(key)) return;
    try {
      f(entries.at(key).value);
    } catch (const Error& e) {
      fail(key, e.what());
    }
  };
  const auto unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  const auto positive = [](double v) { return v > 0.0 && std::isfinite(v); };
  const auto finite = [](double v) { return std::isfinite(v); };

  guarded("dist", [&](const std::string& v) { cfg.dist = parse_distribution(v); });
  if (auto v = real("mu", unit, "lie in [0,1]")) cfg.mu = *v;
  guarded("mu_grid", [&](const std::string& v) {
    cfg.mu_grid = parse_grid(v);
    if (cfg.mu_grid.empty()) throw InvalidArgument("mu_grid is empty");
    for (double m : cfg.mu_grid) {
      if (!unit(m)) throw InvalidArgument("mu_grid values must lie in [0,1]");
    }
  });
  guarded("regime", [&](const std::string& v) {
    if (v == "one_period") cfg.regime = SolveRegime::one_period;
    else if (v == "two_period") cfg.regime = SolveRegime::two_period;
    else if (v == "three_period") cfg.regime = SolveRegime::three_period;
    else throw InvalidArgument("regime must be one_period, two_period or three_period");
  });
  if (auto v = integer("n_periods", 1, 24)) cfg.n_periods = static_cast<int>(*v);
  guarded("thresholds", [&](const std::string& v) {
    std::string err;
    cfg.thresholds = parse_reals(v, err);
    if (!err.empty()) throw InvalidArgument(err);
  });
  if (auto v = real("tol", positive, "be a positive number")) cfg.solver.tol = *v;
  if (auto v = integer("max_iter", 1, 100000)) cfg.solver.max_iter = static_cast<int>(*v);
  if (auto v = integer("scan_points", 1, 10'000'000)) cfg.solver.scan_points = static_cast<int>(*v);
  if (auto v = integer("outer_scan_points", 1, 1'000'000)) {
    cfg.three.outer_scan_points = static_cast<int>(*v);
  }
  if (auto v = integer("starts", 0, 100000)) cfg.three.starts = static_cast<int>(*v);
  guarded("seed", [&](const std::string& v) {
    const auto s = parse_int<std::uint64_t>(v);
    if (!s) throw InvalidArgument("seed must be an unsigned 64-bit integer");
    cfg.seed = *s;
  });
  if (auto v = integer("n_agents", 1, 1'000'000'000)) cfg.n_agents = static_cast<std::uint64_t>(*v);
  if (auto v = integer("samples_per_decile", 1, 1'000'000)) cfg.samples_per_decile = static_cast<int>(*v);
  if (auto v = real("series_low", finite, "be finite")) cfg.series_low = *v;
  if (auto v = real("series_high", finite, "be finite")) cfg.series_high = *v;
  if (auto v = integer("series_points", 2, 1'000'000)) cfg.series_points = static_cast<int>(*v);

  if (auto v = integer("n_total", 1, 1'000'000)) cfg.screening.n_total = static_cast<int>(*v);
  if (auto v = integer("m_allowed", 0, 1'000'000)) cfg.screening.m_allowed = static_cast<int>(*v);
  if (auto v = real("theta_low", finite, "be finite")) cfg.screening.theta_low = *v;
  if (auto v = real("theta_high", finite, "be finite")) cfg.screening.theta_high = *v;
  guarded("straddle_policy", [&](const std::string& v) {
    if (v == "fire_below_average_part") cfg.screening.policy = StraddlePolicy::fire_below_average_part;
    else if (v == "keep_whole_slice") cfg.screening.policy = StraddlePolicy::keep_whole_slice;
    else throw InvalidArgument("straddle_policy must be fire_below_average_part or keep_whole_slice");
  });
  if (entries.count("theta_low") && entries.count("theta_high") &&
      !(cfg.screening.theta_low < cfg.screening.theta_high)) {
    fail("theta_high", "theta_high must exceed theta_low");
  }

  auto& p = cfg.contract;
  guarded("outcomes", [&](const std::string& v) {
    std::string err;
    p.outcomes = parse_reals(v, err);
    if (!err.empty()) throw InvalidArgument(err);
  });
  guarded("effort_costs", [&](const std::string& v) {
    std::string err;
    p.effort_costs = parse_reals(v, err);
    if (!err.empty()) throw InvalidArgument(err);
  });
  guarded("density", [&](const std::string& v) {
    std::string err;
    for (auto row : split(v, ';')) {
      if (row.size() < 2 || row.front() != '(' || row.back() != ')') {
        throw InvalidArgument("density rows look like (f1,f2,...);(f1,f2,...)");
      }
      p.density.push_back(parse_reals(row.substr(1, row.size() - 2), err));
      if (!err.empty()) throw InvalidArgument(err);
    }
  });
  guarded("agent_utility", [&](const std::string& v) { p.agent_utility = parse_utility(v); });
  guarded("principal_utility", [&](const std::string& v) { p.principal_utility = parse_utility(v); });
  if (auto v = real("reservation", finite, "be finite")) p.reservation = *v;
  std::optional<double> wage_low = real("wage_low", finite, "be finite");
  std::optional<double> wage_high = real("wage_high", finite, "be finite");
  int wage_levels = 21;
  if (auto v = integer("wage_levels", 2, 100000)) wage_levels = static_cast<int>(*v);

  // Cross-key checks only once the pieces parsed.
  if (issues.empty()) {
    if (sub == Subcommand::tree && cfg.n_periods > 3 && cfg.thresholds.empty()) {
      issues.push_back({0, 0, "thresholds", "required when n_periods > 3", false});
    }
    if (sub == Subcommand::simulate && cfg.regime == SolveRegime::one_period) {
      fail("regime", "simulate needs two_period or three_period");
    }
    if (sub == Subcommand::moral_hazard) {
      const double lo = wage_low.value_or(0.0);
      const double hi = wage_high.value_or(p.outcomes.empty() ? 1.0 : p.outcomes.back());
      try {
        p.wage_grid = make_wage_grid(lo, hi, wage_levels);
        p.validate();
      } catch (const Error& e) {
        issues.push_back({0, 0, "density", e.what(), false});
      }
    }
    if (sub == Subcommand::screening) {
      try {
        cfg.screening.validate();
      } catch (const Error& e) {
        issues.push_back({0, 0, "n_total", e.what(), false});
      }
    }
  }
  if (!issues.empty()) throw ConfigError(std::move(issues));
  return cfg;
}

}  // namespace labmarket
