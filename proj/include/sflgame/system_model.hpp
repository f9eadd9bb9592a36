// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <string>
#include <vector>

namespace sflgame {

struct LayerProfile {
  double forward_flops = 0.0;   // per sample
  double backward_flops = 0.0;  // per sample
  double activation_bits = 0.0; // per sample, emitted by this layer
  double gradient_bits = 0.0;   // per sample, returned to this layer
  double param_bits = 0.0;
};

struct TenantSpec {
  int id = 0;  // row index into DeviceSpec::data_sizes and cost_coeff
  std::string name;
  std::vector<LayerProfile> layers;
  double budget = 1.0;
  double deadline_s = 1.0;
  double server_flops = 1.0;
  int sync_interval = 1;
  double agg_time_s = 0.0;
  double smoothness = 1.0;
  double strong_convexity = 1.0;

  int layer_count() const { return static_cast<int>(layers.size()); }
  double total_param_bits() const;
  void validate() const;
};

struct DeviceSpec {
  int id = 0;
  double compute_flops = 1.0;
  double uplink_bps = 1.0;
  double downlink_bps = 1.0;
  std::vector<double> data_sizes;  // per tenant
  std::vector<double> cost_coeff;  // per tenant
  double cost_exponent = 2.0;

  double data_for(const TenantSpec& tenant) const;
  double cost_for(const TenantSpec& tenant) const;
  void validate(std::size_t tenant_count) const;
};

/// `no_split` keeps the whole model on the device (cut = H); used by the
/// FedPEFT baseline only.
enum class SplitMode { split, no_split };

/// Cut layer per device for one tenant, aligned with the device list it was
/// built for.
struct SplitPlan {
  std::vector<int> cuts;
  SplitMode mode = SplitMode::split;
};

struct SplitSizes {
  double device_bits = 0.0;
  double server_bits = 0.0;
};

void validate_cut(const TenantSpec& tenant, int cut, SplitMode mode = SplitMode::split);

SplitSizes split_sizes(const TenantSpec& tenant, int cut, SplitMode mode = SplitMode::split);

double comm_time(const DeviceSpec& device, const TenantSpec& tenant, int cut,
                 SplitMode mode = SplitMode::split);
double device_compute_time(const DeviceSpec& device, const TenantSpec& tenant, int cut,
                           SplitMode mode = SplitMode::split);
double server_compute_time(const DeviceSpec& device, const TenantSpec& tenant, int cut,
                           SplitMode mode = SplitMode::split);

/// I * (device + server compute) + communication, for one device and one cycle.
double device_cycle_time(const DeviceSpec& device, const TenantSpec& tenant, int cut,
                         SplitMode mode = SplitMode::split);

/// Aggregation time plus the slowest device among those holding data for the
/// tenant. Devices without data are skipped.
double cycle_time(const TenantSpec& tenant, std::span<const DeviceSpec> devices,
                  const SplitPlan& plan);

int cycles_within_deadline(const TenantSpec& tenant, std::span<const DeviceSpec> devices,
                           const SplitPlan& plan);

/// Exhaustive scan over s in [1, H-1]; ties go to the smallest cut.
int optimal_cut(const DeviceSpec& device, const TenantSpec& tenant);

SplitPlan optimal_plan(const TenantSpec& tenant, std::span<const DeviceSpec> devices);

}  // namespace sflgame
