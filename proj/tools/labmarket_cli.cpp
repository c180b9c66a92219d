#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "labmarket/run.hpp"

namespace {

bool write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  f << text;
  return static_cast<bool>(f);
}

}  // namespace

int main(int argc, char** argv) {
  using namespace labmarket;
  CLI::App app{"Labor market equilibrium solver with firing and random quits"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_path;
  std::string format = "csv";
  std::string series_path;
  std::uint64_t seed = 0;
  double tol = 0.0;
  unsigned jobs = 1;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "config file (key = value lines)")->required();
    sub->add_option("--out", out_path, "output file (default: stdout)");
    sub->add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    sub->add_option("--seed", seed, "random seed");
    sub->add_option("--tol", tol, "solver tolerance")->check(CLI::PositiveNumber);
    sub->add_option("--jobs", jobs, "worker threads")->check(CLI::Range(1u, 1024u));
  };

  std::string solve_regime;
  auto* solve = app.add_subcommand("solve", "solve one equilibrium");
  solve->add_option("regime", solve_regime, "one-period, two-period or three-period")
      ->check(CLI::IsMember({"one-period", "two-period", "three-period"}));
  solve->add_option("--series", series_path, "write the (w, M(w)) series to this CSV file");
  add_common(solve);

  const std::pair<const char*, const char*> others[] = {
      {"tree", "market tree of an n-period regime"},
      {"sweep", "solve over a grid of quit rates"},
      {"simulate", "agent-based replay of a solved regime"},
      {"screening", "gradual screening probabilities"},
      {"moral-hazard", "first- and second-best contracts"},
      {"welfare", "lifetime wages by productivity decile"}};
  for (auto [name, help] : others) add_common(app.add_subcommand(name, help));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  CLI::App* chosen = app.get_subcommands().front();
  const std::string name = chosen->get_name();
  Subcommand sub = Subcommand::solve;
  if (name == "tree") sub = Subcommand::tree;
  else if (name == "sweep") sub = Subcommand::sweep;
  else if (name == "simulate") sub = Subcommand::simulate;
  else if (name == "screening") sub = Subcommand::screening;
  else if (name == "moral-hazard") sub = Subcommand::moral_hazard;
  else if (name == "welfare") sub = Subcommand::welfare;

  std::ifstream in(config_path, std::ios::binary);
  if (!in) {
    std::cerr << "error: cannot read " << config_path << "\n";
    return 1;
  }
  std::stringstream buf;
  buf << in.rdbuf();
  std::string text = buf.str();
  // The positional regime wins over the config file.
  if (sub == Subcommand::solve && !solve_regime.empty()) {
    std::string r = solve_regime;
    std::replace(r.begin(), r.end(), '-', '_');
    std::string filtered;
    std::istringstream lines(text);
    for (std::string line; std::getline(lines, line);) {
      const auto key = detail::trim(std::string_view(line).substr(0, line.find('=')));
      if (line.find('=') != std::string::npos && key == "regime") continue;
      filtered += line + "\n";
    }
    text = filtered + "regime = " + r + "\n";
  }

  RunConfig cfg;
  try {
    cfg = parse_config(text, sub);
  } catch (const ConfigError& e) {
    std::cerr << config_path << ":\n" << e.what() << "\n";
    return 1;
  }

  RunOptions opts;
  opts.format = format == "json" ? OutputFormat::json : OutputFormat::csv;
  opts.jobs = jobs;
  if (chosen->count("--seed")) opts.seed = seed;
  if (chosen->count("--tol")) opts.tol = tol;
  opts.series = !series_path.empty();

  const RunResult r = execute(cfg, opts);
  if (!r.output.empty()) {
    if (out_path.empty()) {
      std::cout << r.output;
    } else if (!write_file(out_path, r.output)) {
      std::cerr << "error: cannot write " << out_path << "\n";
      return 1;
    }
  }
  if (opts.series && !r.series.empty() && !write_file(series_path, r.series)) {
    std::cerr << "error: cannot write " << series_path << "\n";
    return 1;
  }
  if (!r.message.empty()) std::cerr << (r.exit_code ? "error: " : "") << r.message << "\n";
  return r.exit_code;
}
