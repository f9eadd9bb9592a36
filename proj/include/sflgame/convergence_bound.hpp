// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <compare>
#include <span>
#include <string>
#include <vector>

#include "sflgame/workload.hpp"

namespace sflgame {

/// Nonnegative real or +infinity. Infinity is a flag, not an IEEE value, so
/// ordering and sums stay total.
class BoundValue {
 public:
  BoundValue() = default;
  static BoundValue finite(double v);
  static BoundValue infinity();

  bool is_infinite() const { return infinite_; }
  /// The finite value; +inf as an IEEE double for reporting only.
  double to_double() const;

  BoundValue operator+(const BoundValue& other) const;
  BoundValue operator*(double scale) const;  // scale >= 0
  std::partial_ordering operator<=>(const BoundValue& other) const;
  bool operator==(const BoundValue& other) const = default;

  std::string to_string() const;

 private:
  double value_ = 0.0;
  bool infinite_ = false;
};

enum class LrRule {
  kappa,        // gamma_k = 2 / (max(8L, mu*I) + mu*k)
  literal_max,  // gamma_k = 2 / (max(8L, mu, I) + mu*k)
};

struct BoundParams {
  double smoothness = 1.0;        // L
  double strong_convexity = 1.0;  // mu
  int sync_interval = 1;          // I
  std::vector<double> G_sq;
  std::vector<double> sigma_sq;
  std::vector<double> a;
  double init_dist_sq = 0.0;
  double F_star = 0.0;
  std::vector<double> F_j_min;
  double steps_per_sample = 1.0;  // E
  LrRule lr_rule = LrRule::kappa;

  void validate() const;
};

struct BoundTerms {
  double alpha = 0.0;
  double beta = 0.0;
  double A0 = 0.0;
  double A1 = 0.0;
};

double lr_schedule(const BoundParams& params, int k);

BoundTerms bound_terms(const BoundParams& params);

/// sum_j (1 - q_j) a_j^2 G_j^2 / q_j; infinite when some q_j = 0 while
/// a_j * G_j > 0. Devices with a_j G_j = 0 contribute nothing.
BoundValue participation_penalty(std::span<const double> a, std::span<const double> G_sq, std::span<const double> q);

/// (1/K) (alpha * participation_penalty + beta).
BoundValue optimality_gap_bound(const BoundParams& params, std::span<const double> q, int K);

/// Right-hand side of the per-cycle variance bound for frozen local updates:
/// 4 gamma^2 E^2 sum_j (1 - q_j) a_j^2 G_j^2 / q_j.
BoundValue aggregation_variance_bound(const BoundParams& params, double gamma, std::span<const double> q);

struct QuadraticStats {
  BoundParams params;
  Eigen::VectorXd minimizer;  // argmin of sum_j a_j F_j
  double trust_radius = 0.0;  // G_sq is a sup over the ball of this radius around the minimizer
};

/// Exact constants for diagonal quadratics. `trust_radius <= 0` selects
/// 1.5 * max(||w0 - w*||, max_j ||t_j - w*||). Gradients are full-batch, so
/// sigma_sq is zero.
QuadraticStats exact_quadratic_stats(std::span<const QuadraticWorkload> workloads, std::span<const double> a,
                                     const Eigen::VectorXd& w0, int sync_interval, double trust_radius = 0.0);

/// One device's gradient statistics at one warm-up round.
struct WarmupRecord {
  int device = 0;
  double grad_norm_sq = 0.0;     // ||full-batch gradient||^2
  double sample_variance = 0.0;  // mean_m ||g_m - g||^2 over samples
};

struct GradientStats {
  std::vector<double> G_sq;
  std::vector<double> sigma_sq;
};

/// Sup-style estimates: G^2 is the largest observed squared gradient norm times
/// `safety`, sigma^2 the largest observed per-sample variance.
GradientStats estimate_gradient_stats(std::span<const WarmupRecord> records, std::size_t devices,
                                      double safety = 1.2, int min_rounds = 20);

/// Full-participation gradient descent from `w0` for `rounds` rounds, recording
/// every device's statistics at each visited point.
std::vector<WarmupRecord> record_warmup(std::span<const Workload> workloads, std::span<const double> a,
                                        std::span<const double> w0, double gamma, int rounds);

}  // namespace sflgame
