// SPDX-License-Identifier: Apache-2.0
#include "sflgame/error.hpp"

namespace sflgame {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::invalid_argument: return "invalid-argument";
    case ErrorCode::invalid_cut: return "invalid-cut";
    case ErrorCode::invalid_device: return "invalid-device";
    case ErrorCode::infeasible_deadline: return "infeasible-deadline";
    case ErrorCode::shape: return "shape";
    case ErrorCode::numerical_divergence: return "numerical-divergence";
    case ErrorCode::assembly: return "assembly";
    case ErrorCode::division_guard: return "division-guard";
    case ErrorCode::invalid_workload: return "invalid-workload";
    case ErrorCode::insufficient_data: return "insufficient-data";
    case ErrorCode::budget_infeasible: return "budget-infeasible";
    case ErrorCode::non_convergence: return "non-convergence";
    case ErrorCode::invalid_scenario: return "invalid-scenario";
    case ErrorCode::config: return "config";
  }
  return "unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

void fail(ErrorCode code, const std::string& message) { throw Error(code, message); }

}  // namespace sflgame
