// SPDX-License-Identifier: Apache-2.0
// Command-line front end: solve, simulate, verify, sweep.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "sflgame/error.hpp"
#include "sflgame/experiment.hpp"

namespace fs = std::filesystem;
using namespace sflgame;

namespace {

enum Exit { kOk = 0, kConfig = 2, kInvariant = 3, kNonConvergence = 4 };

struct CommonArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> policy;
  std::string out = "out";
  int workers = 1;
};

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::config:
    case ErrorCode::invalid_scenario:
    case ErrorCode::infeasible_deadline:
    case ErrorCode::budget_infeasible:
    case ErrorCode::invalid_argument:
    case ErrorCode::invalid_device:
    case ErrorCode::invalid_cut:
      return kConfig;
    case ErrorCode::non_convergence:
      return kNonConvergence;
    default:
      return kInvariant;
  }
}

ScenarioConfig resolve_config(const CommonArgs& args) {
  ScenarioConfig cfg = args.config.empty() ? ScenarioConfig{} : load_config(args.config);
  if (args.seed) cfg.seed = *args.seed;
  if (args.policy) {
    try {
      cfg.policy = parse_policy(*args.policy);
    } catch (const Error&) {
      fail(ErrorCode::config, "--policy: unknown value '" + *args.policy + "'");
    }
  }
  return cfg;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::config, path.string() + ": cannot write");
  out << text;
}

template <class F>
std::string render(F&& f) {
  std::ostringstream os;
  f(os);
  return os.str();
}

void write_outputs(const fs::path& dir, const ScenarioConfig& cfg, const std::string& command,
                   const std::vector<std::pair<std::string, std::string>>& files) {
  fs::create_directories(dir);
  std::vector<std::string> names;
  for (const auto& [name, body] : files) {
    write_text(dir / name, body);
    names.push_back(name);
  }
  write_text(dir / "manifest.json", manifest_json(cfg, cfg.seed, command, names).dump(2) + "\n");
}

int run_report(const CommonArgs& args, bool simulate) {
  const ScenarioConfig cfg = resolve_config(args);
  const Scenario scenario = generate_scenario(cfg, cfg.seed);
  const MetricsReport report = simulate ? cmd_simulate(scenario, args.workers) : cmd_solve(scenario, args.workers);
  std::vector<std::pair<std::string, std::string>> files{
      {"report.json", report_json(report, scenario).dump(2) + "\n"},
      {"tenants.csv", render([&](std::ostream& os) { write_tenant_csv(os, report, scenario); })},
      {"devices.csv", render([&](std::ostream& os) { write_device_csv(os, report, scenario); })},
  };
  if (report.outcome.trace) {
    files.emplace_back("game_trace.csv", render([&](std::ostream& os) { write_game_trace_csv(os, *report.outcome.trace); }));
  }
  for (std::size_t i = 0; i < report.simulation.size(); ++i) {
    files.emplace_back("cycles_tenant" + std::to_string(i) + ".csv",
                       render([&](std::ostream& os) { write_cycle_trace_csv(os, report.simulation[i].trace); }));
  }
  write_outputs(args.out, cfg, report.command, files);
  std::cout << report.command << ": policy=" << to_string(report.outcome.policy)
            << " total_disutility=" << report.outcome.total.value().to_string()
            << " approved_updates=" << report.outcome.approved << " -> " << args.out << "\n";
  return kOk;
}

int run_verify(const CommonArgs& args) {
  const ScenarioConfig cfg = resolve_config(args);
  const Scenario scenario = generate_scenario(cfg, cfg.seed);
  const VerifySummary summary = cmd_verify(scenario, args.workers);
  write_outputs(args.out, cfg, "verify", {{"verify.json", verify_json(summary).dump(2) + "\n"}});
  for (const auto& c : summary.checks) {
    std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << (c.gating ? "" : " (informational)") << ": " << c.detail
              << "\n";
  }
  std::cout << (summary.passed() ? "verify: all gating checks passed\n" : "verify: invariant failure\n");
  return summary.passed() ? kOk : kInvariant;
}

int run_sweep(const CommonArgs& args, const SweepGrid& grid) {
  const ScenarioConfig cfg = resolve_config(args);
  const auto rows = cmd_sweep(cfg, grid, cfg.seed, args.workers);
  write_outputs(args.out, cfg, "sweep",
                {{"sweep.csv", render([&](std::ostream& os) { write_sweep_csv(os, rows); })}});
  std::cout << "sweep: " << rows.size() << " rows -> " << args.out << "\n";
  return kOk;
}

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config, "Scenario config (JSON)")->check(CLI::ExistingFile);
  cmd->add_option("--seed", args.seed, "Override the config seed");
  cmd->add_option("--policy", args.policy, "prince | fair | msda | fedpeft | full");
  cmd->add_option("--out", args.out, "Output directory")->capture_default_str();
  cmd->add_option("--workers", args.workers, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-tenant split federated learning pricing simulator"};
  app.require_subcommand(1);
  CommonArgs args;
  auto* solve = app.add_subcommand("solve", "Run the pricing game only");
  auto* simulate = app.add_subcommand("simulate", "Price, then train under the resulting participation");
  auto* verify = app.add_subcommand("verify", "Run the invariant suite on a scenario");
  auto* sweep = app.add_subcommand("sweep", "Grid over tenant count, device count and policy");
  for (auto* c : {solve, simulate, verify, sweep}) add_common(c, args);
  SweepGrid grid;
  std::vector<std::string> policy_names;
  sweep->add_option("--tenants", grid.tenants, "Tenant counts")->capture_default_str();
  sweep->add_option("--devices", grid.devices, "Device counts")->capture_default_str();
  sweep->add_option("--policies", policy_names, "Policies (default: all)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfig;
  }

  try {
    if (*solve) return run_report(args, false);
    if (*simulate) return run_report(args, true);
    if (*verify) return run_verify(args);
    if (!policy_names.empty()) {
      grid.policies.clear();
      for (const auto& p : policy_names) grid.policies.push_back(parse_policy(p));
    }
    return run_sweep(args, grid);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInvariant;
  }
}
