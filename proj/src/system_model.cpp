// SPDX-License-Identifier: Apache-2.0
#include "sflgame/system_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sflgame/error.hpp"

namespace sflgame {

namespace {

bool finite_nonneg(double v) { return std::isfinite(v) && v >= 0.0; }

std::string tenant_label(const TenantSpec& t) { return "tenant " + std::to_string(t.id); }

}  // namespace

double TenantSpec::total_param_bits() const {
  double total = 0.0;
  for (const auto& l : layers) total += l.param_bits;
  return total;
}

void TenantSpec::validate() const {
  require(id >= 0, ErrorCode::invalid_argument, "tenant id must be non-negative");
  require(layers.size() >= 2, ErrorCode::invalid_argument, tenant_label(*this) + " needs at least 2 layers");
  for (const auto& l : layers) {
    require(finite_nonneg(l.forward_flops) && finite_nonneg(l.backward_flops) &&
                finite_nonneg(l.activation_bits) && finite_nonneg(l.gradient_bits) &&
                finite_nonneg(l.param_bits),
            ErrorCode::invalid_argument, tenant_label(*this) + " has a negative layer quantity");
  }
  require(budget > 0.0 && std::isfinite(budget), ErrorCode::invalid_argument, tenant_label(*this) + " budget must be > 0");
  require(deadline_s > 0.0, ErrorCode::invalid_argument, tenant_label(*this) + " deadline must be > 0");
  require(server_flops > 0.0, ErrorCode::invalid_argument, tenant_label(*this) + " server capacity must be > 0");
  require(sync_interval >= 1, ErrorCode::invalid_argument, tenant_label(*this) + " sync interval must be >= 1");
  require(agg_time_s >= 0.0, ErrorCode::invalid_argument, tenant_label(*this) + " aggregation time must be >= 0");
  require(strong_convexity > 0.0 && strong_convexity <= smoothness, ErrorCode::invalid_argument,
          tenant_label(*this) + " requires 0 < mu <= L");
}

double DeviceSpec::data_for(const TenantSpec& tenant) const {
  require(static_cast<std::size_t>(tenant.id) < data_sizes.size(), ErrorCode::invalid_device,
          "device " + std::to_string(id) + " has no data entry for " + tenant_label(tenant));
  return data_sizes[static_cast<std::size_t>(tenant.id)];
}

double DeviceSpec::cost_for(const TenantSpec& tenant) const {
  require(static_cast<std::size_t>(tenant.id) < cost_coeff.size(), ErrorCode::invalid_device,
          "device " + std::to_string(id) + " has no cost entry for " + tenant_label(tenant));
  return cost_coeff[static_cast<std::size_t>(tenant.id)];
}

void DeviceSpec::validate(std::size_t tenant_count) const {
  const std::string label = "device " + std::to_string(id);
  require(compute_flops > 0.0, ErrorCode::invalid_device, label + " compute must be > 0");
  require(uplink_bps > 0.0 && downlink_bps > 0.0, ErrorCode::invalid_device, label + " link rates must be > 0");
  require(data_sizes.size() == tenant_count && cost_coeff.size() == tenant_count, ErrorCode::invalid_device,
          label + " needs one data size and one cost per tenant");
  for (double d : data_sizes) require(finite_nonneg(d), ErrorCode::invalid_device, label + " data sizes must be >= 0");
  for (double c : cost_coeff) require(c > 0.0 && std::isfinite(c), ErrorCode::invalid_device, label + " costs must be > 0");
  require(cost_exponent >= 1.0, ErrorCode::invalid_device, label + " cost exponent must be >= 1");
}

void validate_cut(const TenantSpec& tenant, int cut, SplitMode mode) {
  const int h = tenant.layer_count();
  if (mode == SplitMode::no_split) {
    require(cut == h, ErrorCode::invalid_cut, "no-split mode requires cut = " + std::to_string(h));
    return;
  }
  require(cut >= 1 && cut <= h - 1, ErrorCode::invalid_cut,
          "cut " + std::to_string(cut) + " outside [1, " + std::to_string(h - 1) + "]");
}

SplitSizes split_sizes(const TenantSpec& tenant, int cut, SplitMode mode) {
  validate_cut(tenant, cut, mode);
  SplitSizes out;
  for (int n = 0; n < tenant.layer_count(); ++n) {
    (n < cut ? out.device_bits : out.server_bits) += tenant.layers[static_cast<std::size_t>(n)].param_bits;
  }
  return out;
}

double comm_time(const DeviceSpec& device, const TenantSpec& tenant, int cut, SplitMode mode) {
  require(device.uplink_bps > 0.0 && device.downlink_bps > 0.0, ErrorCode::invalid_device,
          "device " + std::to_string(device.id) + " has a zero link rate");
  const double w_c = split_sizes(tenant, cut, mode).device_bits;
  double up = w_c;
  double down = w_c;
  if (mode == SplitMode::split) {
    const auto& cut_layer = tenant.layers[static_cast<std::size_t>(cut - 1)];
    const double rounds_data = tenant.sync_interval * device.data_for(tenant);
    up += rounds_data * cut_layer.activation_bits;
    down += rounds_data * cut_layer.gradient_bits;
  }
  return up / device.uplink_bps + down / device.downlink_bps;
}

double device_compute_time(const DeviceSpec& device, const TenantSpec& tenant, int cut, SplitMode mode) {
  validate_cut(tenant, cut, mode);
  double flops = 0.0;
  for (int n = 0; n < cut; ++n) {
    const auto& l = tenant.layers[static_cast<std::size_t>(n)];
    flops += l.forward_flops + l.backward_flops;
  }
  return device.data_for(tenant) * flops / device.compute_flops;
}

double server_compute_time(const DeviceSpec& device, const TenantSpec& tenant, int cut, SplitMode mode) {
  validate_cut(tenant, cut, mode);
  double flops = 0.0;
  for (int n = cut; n < tenant.layer_count(); ++n) {
    const auto& l = tenant.layers[static_cast<std::size_t>(n)];
    flops += l.forward_flops + l.backward_flops;
  }
  if (flops == 0.0) return 0.0;
  return device.data_for(tenant) * flops / tenant.server_flops;
}

double device_cycle_time(const DeviceSpec& device, const TenantSpec& tenant, int cut, SplitMode mode) {
  return tenant.sync_interval *
             (device_compute_time(device, tenant, cut, mode) + server_compute_time(device, tenant, cut, mode)) +
         comm_time(device, tenant, cut, mode);
}

double cycle_time(const TenantSpec& tenant, std::span<const DeviceSpec> devices, const SplitPlan& plan) {
  require(!devices.empty(), ErrorCode::invalid_argument, "cycle_time needs a nonempty device set");
  require(plan.cuts.size() == devices.size(), ErrorCode::invalid_argument,
          "split plan has " + std::to_string(plan.cuts.size()) + " cuts for " + std::to_string(devices.size()) +
              " devices");
  double slowest = -1.0;
  for (std::size_t j = 0; j < devices.size(); ++j) {
    if (devices[j].data_for(tenant) <= 0.0) continue;
    slowest = std::max(slowest, device_cycle_time(devices[j], tenant, plan.cuts[j], plan.mode));
  }
  require(slowest >= 0.0, ErrorCode::invalid_argument, tenant_label(tenant) + " has no device holding data");
  return tenant.agg_time_s + slowest;
}

int cycles_within_deadline(const TenantSpec& tenant, std::span<const DeviceSpec> devices, const SplitPlan& plan) {
  const double t = cycle_time(tenant, devices, plan);
  require(t > 0.0, ErrorCode::invalid_argument, "cycle time must be positive");
  const double k = std::floor(tenant.deadline_s / t);
  require(k >= 1.0, ErrorCode::infeasible_deadline,
          tenant_label(tenant) + ": deadline " + std::to_string(tenant.deadline_s) + " s is shorter than one cycle (" +
              std::to_string(t) + " s)");
  return k > std::numeric_limits<int>::max() ? std::numeric_limits<int>::max() : static_cast<int>(k);
}

int optimal_cut(const DeviceSpec& device, const TenantSpec& tenant) {
  require(tenant.layer_count() >= 2, ErrorCode::invalid_argument, "optimal_cut needs H >= 2");
  int best = 1;
  double best_time = std::numeric_limits<double>::infinity();
  for (int s = 1; s <= tenant.layer_count() - 1; ++s) {
    const double t = device_cycle_time(device, tenant, s);
    if (t < best_time) {
      best_time = t;
      best = s;
    }
  }
  return best;
}

SplitPlan optimal_plan(const TenantSpec& tenant, std::span<const DeviceSpec> devices) {
  SplitPlan plan;
  plan.cuts.reserve(devices.size());
  for (const auto& d : devices) plan.cuts.push_back(optimal_cut(d, tenant));
  return plan;
}

}  // namespace sflgame
