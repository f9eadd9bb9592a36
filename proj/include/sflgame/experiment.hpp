// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "sflgame/baselines.hpp"
#include "sflgame/game_engine.hpp"
#include "sflgame/scenario.hpp"
#include "sflgame/sfl_engine.hpp"

namespace sflgame {

/// Prices, responses and disutilities one policy produces on a scenario.
struct PolicyOutcome {
  PolicyKind policy = PolicyKind::prince;
  std::vector<SplitPlan> plans;  // per tenant
  std::vector<int> cycles;       // K per tenant
  PricingProfile P;
  ParticipationProfile q;
  std::vector<BoundValue> disutility;
  PotentialValue total;
  std::optional<GameTrace> trace;
  int approved = 0;
};

GameInstance build_game(const Scenario& scenario, const std::vector<int>& cycles);

PolicyOutcome solve_policy(const Scenario& scenario, PolicyKind policy, int workers = 1);

struct TenantSimulation {
  double F_star = 0.0;
  double target = 0.0;
  double final_loss = 0.0;         // mean over replicates
  double cycles_to_target = 0.0;   // mean; a replicate that never reaches the target counts K + 1
  int reached = 0;                 // replicates that reached the target
  std::vector<CycleTrace> trace;   // first replicate
};

/// Runs each tenant's training for K cycles under the outcome's participation.
/// Seeds depend on (scenario seed, tenant, replicate) only, so policies share
/// random numbers.
std::vector<TenantSimulation> simulate_policy(const Scenario& scenario, const PolicyOutcome& outcome);

struct MetricsReport {
  std::string command;
  PolicyOutcome outcome;
  std::vector<TenantSimulation> simulation;  // empty for solve
  std::uint64_t seed = 0;
  std::uint64_t scenario_hash = 0;
};

MetricsReport cmd_solve(const Scenario& scenario, int workers = 1);
MetricsReport cmd_simulate(const Scenario& scenario, int workers = 1);

struct VerifyCheck {
  std::string name;
  bool passed = false;
  bool gating = true;
  std::string detail;
};

struct VerifySummary {
  std::vector<VerifyCheck> checks;
  bool passed() const;
};

VerifySummary cmd_verify(const Scenario& scenario, int workers = 1);

struct SweepRow {
  int tenants = 0;
  int devices = 0;
  PolicyKind policy = PolicyKind::prince;
  double total_disutility = 0.0;  // +inf when some tenant's disutility is infinite
  int infinite_tenants = 0;
  int approved = 0;
  double mean_cycles = 0.0;
};

struct SweepGrid {
  std::vector<int> tenants{2, 4};
  std::vector<int> devices{20, 50, 100};
  std::vector<PolicyKind> policies{PolicyKind::prince, PolicyKind::fair, PolicyKind::msda, PolicyKind::fedpeft,
                                   PolicyKind::full_participation};
};

/// Cells run on `workers` threads; rows come back in grid order.
std::vector<SweepRow> cmd_sweep(const ScenarioConfig& base, const SweepGrid& grid, std::uint64_t seed, int workers);

// Export. Every file is a pure function of (config, seed).
nlohmann::json report_json(const MetricsReport& report, const Scenario& scenario);
void write_tenant_csv(std::ostream& out, const MetricsReport& report, const Scenario& scenario);
void write_device_csv(std::ostream& out, const MetricsReport& report, const Scenario& scenario);
void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);
nlohmann::json verify_json(const VerifySummary& summary);
nlohmann::json manifest_json(const ScenarioConfig& config, std::uint64_t seed, const std::string& command,
                             const std::vector<std::string>& files);

inline constexpr const char* kVersion = "1.0.0";

}  // namespace sflgame
