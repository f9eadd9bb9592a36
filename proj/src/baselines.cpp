// SPDX-License-Identifier: Apache-2.0
#include "sflgame/baselines.hpp"

#include <string>

#include "sflgame/error.hpp"

namespace sflgame {

std::string_view to_string(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::prince: return "prince";
    case PolicyKind::fair: return "fair";
    case PolicyKind::msda: return "msda";
    case PolicyKind::fedpeft: return "fedpeft";
    case PolicyKind::full_participation: return "full";
  }
  return "unknown";
}

PolicyKind parse_policy(std::string_view text) {
  for (auto k : {PolicyKind::prince, PolicyKind::fair, PolicyKind::msda, PolicyKind::fedpeft,
                 PolicyKind::full_participation}) {
    if (text == to_string(k)) return k;
  }
  fail(ErrorCode::config, "unknown policy '" + std::string(text) + "'");
}

Eigen::VectorXd fair_pricing(const TenantSpec& tenant, std::span<const DeviceSpec> devices) {
  Eigen::VectorXd data(static_cast<Eigen::Index>(devices.size()));
  for (std::size_t j = 0; j < devices.size(); ++j) data(static_cast<Eigen::Index>(j)) = devices[j].data_for(tenant);
  const double total = data.sum();
  require(total > 0.0, ErrorCode::invalid_scenario, "tenant " + std::to_string(tenant.id) + " has no data anywhere");
  Eigen::VectorXd row = tenant.budget * (data / total);
  fit_to_budget(row, tenant.budget);
  return row;
}

Eigen::VectorXd msda_pricing(const TenantSpec& tenant, std::span<const DeviceSpec> devices) {
  require(!devices.empty(), ErrorCode::invalid_scenario, "need at least one device");
  Eigen::VectorXd row =
      Eigen::VectorXd::Constant(static_cast<Eigen::Index>(devices.size()), tenant.budget / devices.size());
  fit_to_budget(row, tenant.budget);
  return row;
}

SplitPlan fedpeft_plan(const TenantSpec& tenant, std::span<const DeviceSpec> devices) {
  SplitPlan plan;
  plan.mode = SplitMode::no_split;
  plan.cuts.assign(devices.size(), tenant.layer_count());
  return plan;
}

Eigen::VectorXd full_participation_policy(std::size_t devices) {
  return Eigen::VectorXd::Ones(static_cast<Eigen::Index>(devices));
}

PricingProfile baseline_prices(PolicyKind kind, std::span<const TenantSpec> tenants,
                               std::span<const DeviceSpec> devices) {
  require(kind == PolicyKind::fair || kind == PolicyKind::msda, ErrorCode::invalid_argument,
          "fixed prices exist only for fair and msda");
  PricingProfile P(static_cast<Eigen::Index>(tenants.size()), static_cast<Eigen::Index>(devices.size()));
  for (std::size_t i = 0; i < tenants.size(); ++i) {
    P.row(static_cast<Eigen::Index>(i)) =
        (kind == PolicyKind::fair ? fair_pricing(tenants[i], devices) : msda_pricing(tenants[i], devices)).transpose();
  }
  return P;
}

}  // namespace sflgame
