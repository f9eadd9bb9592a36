// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "sflgame/baselines.hpp"
#include "sflgame/convergence_bound.hpp"
#include "sflgame/model_state.hpp"
#include "sflgame/system_model.hpp"
#include "sflgame/workload.hpp"

namespace sflgame {

enum class WorkloadKind { quadratic, mlp };

std::string_view to_string(WorkloadKind kind);

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

/// Per-tenant overrides on top of a named model preset.
struct TenantConfig {
  std::string preset = "vit-b16";
  std::optional<double> budget_per_device;  // B_i = value * N
  std::optional<double> deadline_s;
  std::optional<double> total_samples;
  std::optional<double> smoothness;
  std::optional<double> strong_convexity;
  std::optional<double> cost_scale;
};

struct Tolerances {
  double kkt = 1e-8;
  double unbiased = 1e-12;
  double split_equivalence = 1e-10;
};

struct ScenarioConfig {
  int schema_version = 1;
  std::uint64_t seed = 1;
  PolicyKind policy = PolicyKind::prince;
  WorkloadKind workload = WorkloadKind::quadratic;
  int device_count = 100;
  int tenant_count = 4;  // used when `tenants` is empty: presets in fixed order
  std::vector<TenantConfig> tenants;

  Range compute_flops{1567e9, 3100e9};
  Range downlink_bps{50e6, 250e6};
  Range uplink_bps{17e6, 83e6};
  Range watts{20.0, 40.0};
  double cost_per_watt = 0.01;
  double cost_exponent = 2.0;
  double server_total_flops = 330.32e12;
  double power_law_exponent = 1.2;
  double agg_time_s = 0.0;

  int sync_interval = 2;
  int model_dim = 4;      // quadratic parameters, or MLP hidden width
  int model_layers = 4;   // layers of the synthetic workload
  double target_spread = 0.5;
  double trust_radius = 0.0;  // <= 0 selects the automatic radius
  LrRule lr_rule = LrRule::kappa;
  int mlp_samples = 16;   // per device, MLP workload only
  int warmup_rounds = 20;

  double q_floor = 1e-3;
  double eps_improve = 1e-6;
  int multistart = 64;
  int max_iterations = 10000;
  int replicates = 10;      // simulation seeds per tenant and policy
  double target_factor = 1.05;
  Tolerances tolerances;
};

/// Parses and validates a config document. Errors name the offending field.
ScenarioConfig parse_config(const nlohmann::json& doc);
ScenarioConfig load_config(const std::string& path);
nlohmann::json to_json(const ScenarioConfig& config);

/// One tenant's synthetic learning problem, one workload per device.
struct TenantWorkloads {
  std::vector<Workload> per_device;
  ModelState initial;
  BoundParams bound;
  std::optional<Eigen::VectorXd> minimizer;  // quadratic kind only
  double trust_radius = 0.0;
};

struct Scenario {
  ScenarioConfig config;
  std::vector<TenantSpec> tenants;
  std::vector<DeviceSpec> devices;
  std::vector<TenantWorkloads> workloads;  // per tenant
  std::uint64_t seed = 0;

  void validate() const;
};

/// Layer profile presets: vit-b16, bert-base, whisper-base, llama2-7b-lora.
std::vector<std::string> preset_names();
TenantSpec tenant_preset(const std::string& name);

/// Fully determined by (config, seed).
Scenario generate_scenario(const ScenarioConfig& config, std::uint64_t seed);

/// Workload-layout cut for a tenant-level cut, scaled to the workload depth.
int workload_cut(const TenantSpec& tenant, int tenant_cut, int workload_layers);

std::uint64_t fnv1a64(const std::string& bytes);
std::uint64_t scenario_hash(const Scenario& scenario);

}  // namespace sflgame
