// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sflgame {

enum class ErrorCode {
  invalid_argument,
  invalid_cut,
  invalid_device,
  infeasible_deadline,
  shape,
  numerical_divergence,
  assembly,
  division_guard,
  invalid_workload,
  insufficient_data,
  budget_infeasible,
  non_convergence,
  invalid_scenario,
  config,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Library-wide exception. Every failure path throws this with a code that
/// callers (notably the CLI) map onto exit statuses.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

inline void require(bool condition, ErrorCode code, const std::string& message) {
  if (!condition) fail(code, message);
}

}  // namespace sflgame
