// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <span>
#include <string_view>

#include "sflgame/game_engine.hpp"
#include "sflgame/system_model.hpp"

namespace sflgame {

enum class PolicyKind { prince, fair, msda, fedpeft, full_participation };

std::string_view to_string(PolicyKind kind);
PolicyKind parse_policy(std::string_view text);

/// Prices proportional to each device's data share; spends the budget exactly.
Eigen::VectorXd fair_pricing(const TenantSpec& tenant, std::span<const DeviceSpec> devices);

/// Budget split evenly over all devices.
Eigen::VectorXd msda_pricing(const TenantSpec& tenant, std::span<const DeviceSpec> devices);

/// Whole model on every device.
SplitPlan fedpeft_plan(const TenantSpec& tenant, std::span<const DeviceSpec> devices);

/// Every device participates in every cycle.
Eigen::VectorXd full_participation_policy(std::size_t devices);

/// Price matrix for a fixed-price policy (fair or msda).
PricingProfile baseline_prices(PolicyKind kind, std::span<const TenantSpec> tenants,
                               std::span<const DeviceSpec> devices);

}  // namespace sflgame
