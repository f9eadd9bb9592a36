// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include "sflgame/convergence_bound.hpp"
#include "sflgame/system_model.hpp"

namespace sflgame {

using PricingProfile = Eigen::MatrixXd;        // M x N, row i is tenant i's prices
using ParticipationProfile = Eigen::MatrixXd;  // M x N

// ---------------------------------------------------------------------------
// Device side

struct DeviceResponse {
  Eigen::VectorXd q;  // one entry per tenant
  double mu = 0.0;    // multiplier of sum_i q_i <= 1
};

/// Utility-maximizing participation of one device facing `prices`.
DeviceResponse device_best_response(std::span<const double> prices, std::span<const double> costs, double tau);

double device_utility(std::span<const double> prices, std::span<const double> costs, double tau,
                      std::span<const double> q);

struct KktResiduals {
  double stationarity = 0.0;
  double complementarity = 0.0;
  double primal = 0.0;
  double dual = 0.0;
  double max() const;
};

/// Residuals of the optimality system with box multipliers recovered from
/// the stationarity equation.
KktResiduals kkt_residuals(std::span<const double> prices, std::span<const double> costs, double tau,
                           const DeviceResponse& response);

// ---------------------------------------------------------------------------
// Game instance

/// Everything the pricing game needs. `weight(i, j) = a_ij^2 G_ij^2` and
/// `scale(i) = alpha_i / K_i`, so tenant i's disutility is
/// scale(i) * sum_j (1 - q_ij) weight(i, j) / q_ij.
struct GameInstance {
  Eigen::MatrixXd cost;       // c_ij
  Eigen::VectorXd tau;        // per device
  Eigen::VectorXd budget;     // B_i
  Eigen::MatrixXd weight;     // a_ij^2 G_ij^2
  Eigen::MatrixXd data_share; // a_ij; devices with a_ij = 0 are not eligible for tenant i
  Eigen::VectorXd scale;      // alpha_i / K_i
  double q_floor = 1e-3;
  double eps_improve = 1e-6;
  std::uint64_t seed = 0;

  int tenants() const { return static_cast<int>(cost.rows()); }
  int devices() const { return static_cast<int>(cost.cols()); }
  bool eligible(int i, int j) const { return data_share(i, j) > 0.0; }
  void validate() const;
};

/// Assembles a game from per-tenant bound constants and cycle counts.
GameInstance make_game(std::span<const BoundParams> bounds, std::span<const int> cycles,
                       std::span<const TenantSpec> tenants, std::span<const DeviceSpec> devices, double q_floor,
                       double eps_improve, std::uint64_t seed);

ParticipationProfile all_device_responses(const PricingProfile& P, const GameInstance& game);

/// scale * sum_j (1 - q_j) w_j / q_j with the infinite sentinel for q_j = 0, w_j > 0.
BoundValue tenant_disutility(std::span<const double> q_row, std::span<const double> weight_row, double scale);
/// Same quantity from bound constants: (alpha / K) * participation penalty.
BoundValue tenant_disutility(std::span<const double> q_row, const BoundParams& params, int K);
BoundValue tenant_disutility(int i, const ParticipationProfile& q, const GameInstance& game);

/// Sum of disutilities together with a refinement that counts infinite
/// terms, so that profiles with some infinite disutility remain comparable:
/// fewer infinite terms first, then the finite remainder.
struct PotentialValue {
  int infinite_terms = 0;
  double finite_part = 0.0;

  BoundValue value() const;
  /// True when `*this` is lower than `other` by more than eps.
  bool improves_on(const PotentialValue& other, double eps) const;
};

PotentialValue potential(const PricingProfile& P, const GameInstance& game);
PotentialValue potential_of_responses(const ParticipationProfile& q, const GameInstance& game);

// ---------------------------------------------------------------------------
// Tenant side

/// Candidate price rows per tenant. Empty means the continuous budget simplex.
struct StrategySpace {
  std::vector<std::vector<Eigen::VectorXd>> rows;  // rows[i] = tenant i's finite strategy set
  bool discrete() const { return !rows.empty(); }
};

/// Smallest price tenant i must pay device j to get participation `q_target`
/// given the other tenants' prices in column j.
double inducing_price(const PricingProfile& P, const GameInstance& game, int i, int j, double q_target);

/// Minimum prices keeping q_ij >= q_floor on eligible devices, zero elsewhere.
Eigen::VectorXd price_floors(const PricingProfile& P, const GameInstance& game, int i);

struct TenantProposal {
  Eigen::VectorXd prices;
  BoundValue disutility;  // tenant's own value under the proposal
};

struct BestResponseOptions {
  int multistart = 64;
  std::uint64_t stream = 0;  // mixed into the sampling seed
};

/// Searches tenant i's budget set for a strictly better own disutility.
/// Returns nothing when the gain would not exceed eps_improve.
std::optional<TenantProposal> tenant_best_response(const PricingProfile& P, const GameInstance& game, int i,
                                                   const BestResponseOptions& options = {},
                                                   const StrategySpace& space = {});

/// Strategy-change request used by the dynamics. Among budget-feasible rows
/// that lower tenant i's own disutility by more than eps_improve, returns the
/// one with the lowest potential. Candidates: the own best response, the
/// minimizers of (potential + eta * own disutility) for several eta, and points
/// on the segments from the current row to each of them. A change of tenant
/// i's price at device j only moves column j, so each weighted problem splits
/// into per-device choices tied by the budget.
std::optional<TenantProposal> tenant_proposal(const PricingProfile& P, const GameInstance& game, int i,
                                              const BestResponseOptions& options = {},
                                              const StrategySpace& space = {});

/// Index of the proposal giving the lowest potential, if it beats the current
/// potential by more than eps_improve. Ties go to the lowest index.
std::optional<int> select_winner(std::span<const std::optional<TenantProposal>> proposals, const PricingProfile& P,
                                 const GameInstance& game);

struct GameIteration {
  int iter = 0;
  int winner = -1;
  PotentialValue potential;
  std::vector<BoundValue> disutility;  // per tenant, after the update
};

struct GameTrace {
  std::vector<GameIteration> iterations;  // entry 0 is the starting profile
};

struct PrinceOptions {
  int max_iterations = 10000;
  int multistart = 64;
  int workers = 1;
  StrategySpace space;
  std::optional<PricingProfile> start;  // defaults to B_i / N everywhere
};

struct PrinceResult {
  PricingProfile P;
  ParticipationProfile q;
  GameTrace trace;
  int approved = 0;
};

/// Improvement dynamics: every tenant submits `tenant_proposal`, the one
/// lowering the potential most is applied, until nobody is approved.
PrinceResult run_prince(const GameInstance& game, const PrinceOptions& options = {});

struct TenantCertificate {
  BoundValue current;
  BoundValue best_found;
  bool passed = true;
};

struct EquilibriumReport {
  std::vector<TenantCertificate> tenants;
  bool passed = true;
};

/// Probes random budget-feasible unilateral deviations plus the best
/// response for each tenant; passes iff none improves by more than eps_improve.
EquilibriumReport verify_equilibrium(const PricingProfile& P, const GameInstance& game, int n_probes = 1000,
                                     const StrategySpace& space = {});

void write_game_trace_csv(std::ostream& out, const GameTrace& trace);

/// Rescales a row so its sum does not exceed `budget` in floating point.
void fit_to_budget(Eigen::VectorXd& row, double budget);

}  // namespace sflgame
