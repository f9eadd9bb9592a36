// SPDX-License-Identifier: Apache-2.0
#include "sflgame/convergence_bound.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "sflgame/error.hpp"

namespace sflgame {

BoundValue BoundValue::finite(double v) {
  require(std::isfinite(v), ErrorCode::invalid_argument, "finite bound value expected");
  BoundValue b;
  b.value_ = v;
  return b;
}

BoundValue BoundValue::infinity() {
  BoundValue b;
  b.infinite_ = true;
  return b;
}

double BoundValue::to_double() const { return infinite_ ? std::numeric_limits<double>::infinity() : value_; }

BoundValue BoundValue::operator+(const BoundValue& other) const {
  if (infinite_ || other.infinite_) return infinity();
  return finite(value_ + other.value_);
}

BoundValue BoundValue::operator*(double scale) const {
  require(scale >= 0.0 && std::isfinite(scale), ErrorCode::invalid_argument, "bound scale must be finite and >= 0");
  if (infinite_) return scale == 0.0 ? finite(0.0) : infinity();
  return finite(value_ * scale);
}

std::partial_ordering BoundValue::operator<=>(const BoundValue& other) const {
  if (infinite_ && other.infinite_) return std::partial_ordering::equivalent;
  if (infinite_) return std::partial_ordering::greater;
  if (other.infinite_) return std::partial_ordering::less;
  return value_ <=> other.value_;
}

std::string BoundValue::to_string() const {
  if (infinite_) return "inf";
  std::ostringstream os;
  os.precision(17);
  os << value_;
  return os.str();
}

void BoundParams::validate() const {
  require(strong_convexity > 0.0 && strong_convexity <= smoothness, ErrorCode::invalid_argument,
          "bound constants need 0 < mu <= L");
  require(sync_interval >= 1, ErrorCode::invalid_argument, "sync interval must be >= 1");
  const std::size_t n = a.size();
  require(G_sq.size() == n && sigma_sq.size() == n && F_j_min.size() == n, ErrorCode::shape,
          "per-device bound vectors differ in length");
  double sum = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    require(a[j] >= 0.0 && G_sq[j] >= 0.0 && sigma_sq[j] >= 0.0, ErrorCode::invalid_argument,
            "weights and gradient statistics must be >= 0");
    sum += a[j];
  }
  require(std::abs(sum - 1.0) <= 1e-9, ErrorCode::invalid_argument, "device weights must sum to 1");
  require(init_dist_sq >= 0.0 && steps_per_sample > 0.0, ErrorCode::invalid_argument,
          "initial distance must be >= 0 and E > 0");
}

double lr_schedule(const BoundParams& p, int k) {
  require(k >= 1, ErrorCode::invalid_argument, "cycle index starts at 1");
  const double L = p.smoothness;
  const double mu = p.strong_convexity;
  const double I = p.sync_interval;
  const double kappa =
      p.lr_rule == LrRule::kappa ? std::max(8.0 * L, mu * I) : std::max({8.0 * L, mu, I});
  return 2.0 / (kappa + mu * k);
}

BoundTerms bound_terms(const BoundParams& p) {
  p.validate();
  const double L = p.smoothness;
  const double mu = p.strong_convexity;
  const double I = p.sync_interval;
  BoundTerms t;
  t.alpha = 8.0 * L * I / (mu * mu);
  double drift = 0.0;
  double weighted_min = 0.0;
  for (std::size_t j = 0; j < p.a.size(); ++j) {
    t.A0 += p.a[j] * p.a[j] * p.sigma_sq[j];
    drift += p.a[j] * p.G_sq[j];
    weighted_min += p.a[j] * p.F_j_min[j];
  }
  t.A0 += 8.0 * drift * (I - 1.0) * (I - 1.0);
  t.A1 = p.F_star - weighted_min;
  t.beta = (2.0 * L / (mu * mu)) * t.A0 + (12.0 * L * L / (mu * mu * I)) * t.A1 +
           (4.0 * L * L / (mu * I)) * p.init_dist_sq;
  return t;
}

BoundValue participation_penalty(std::span<const double> a, std::span<const double> G_sq, std::span<const double> q) {
  require(a.size() == G_sq.size() && a.size() == q.size(), ErrorCode::shape, "a, G^2 and q differ in length");
  double sum = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    require(q[j] >= 0.0 && q[j] <= 1.0, ErrorCode::invalid_argument, "participation level outside [0, 1]");
    const double w = a[j] * a[j] * G_sq[j];
    if (w == 0.0) continue;
    if (q[j] == 0.0) return BoundValue::infinity();
    sum += (1.0 - q[j]) * w / q[j];
  }
  return BoundValue::finite(sum);
}

BoundValue optimality_gap_bound(const BoundParams& p, std::span<const double> q, int K) {
  require(K >= 1, ErrorCode::invalid_argument, "K must be >= 1");
  const BoundTerms t = bound_terms(p);
  return (participation_penalty(p.a, p.G_sq, q) * t.alpha + BoundValue::finite(t.beta)) * (1.0 / K);
}

BoundValue aggregation_variance_bound(const BoundParams& p, double gamma, std::span<const double> q) {
  const double e = p.steps_per_sample;
  return participation_penalty(p.a, p.G_sq, q) * (4.0 * gamma * gamma * e * e);
}

QuadraticStats exact_quadratic_stats(std::span<const QuadraticWorkload> workloads, std::span<const double> a,
                                     const Eigen::VectorXd& w0, int sync_interval, double trust_radius) {
  require(!workloads.empty() && workloads.size() == a.size(), ErrorCode::shape, "need one weight per workload");
  const Eigen::Index dim = workloads.front().target.size();
  double L = 0.0;
  double mu = std::numeric_limits<double>::infinity();
  Eigen::VectorXd num = Eigen::VectorXd::Zero(dim);
  Eigen::VectorXd den = Eigen::VectorXd::Zero(dim);
  for (std::size_t j = 0; j < workloads.size(); ++j) {
    const auto& w = workloads[j];
    validate_workload(Workload{w});
    require(w.target.size() == dim, ErrorCode::invalid_workload, "quadratic workloads differ in dimension");
    L = std::max(L, w.curvature.maxCoeff());
    mu = std::min(mu, w.curvature.minCoeff());
    num.array() += a[j] * w.curvature.array() * w.target.array();
    den.array() += a[j] * w.curvature.array();
  }
  require(w0.size() == dim, ErrorCode::shape, "initial point has the wrong dimension");
  require((den.array() > 0.0).all(), ErrorCode::invalid_workload, "weighted curvature is singular");

  QuadraticStats out;
  out.minimizer = (num.array() / den.array()).matrix();
  double spread = (w0 - out.minimizer).norm();
  for (const auto& w : workloads) spread = std::max(spread, (w.target - out.minimizer).norm());
  out.trust_radius = trust_radius > 0.0 ? trust_radius : 1.5 * spread;

  auto& p = out.params;
  p.smoothness = L;
  p.strong_convexity = mu;
  p.sync_interval = sync_interval;
  p.a.assign(a.begin(), a.end());
  p.sigma_sq.assign(workloads.size(), 0.0);
  p.F_j_min.assign(workloads.size(), 0.0);
  p.G_sq.resize(workloads.size());
  p.F_star = 0.0;
  for (std::size_t j = 0; j < workloads.size(); ++j) {
    const auto& w = workloads[j];
    const double reach = out.trust_radius + (out.minimizer - w.target).norm();
    const double h = w.curvature.maxCoeff();
    p.G_sq[j] = h * h * reach * reach;
    const Eigen::ArrayXd diff = (out.minimizer - w.target).array();
    p.F_star += a[j] * 0.5 * (w.curvature.array() * diff.square()).sum();
  }
  p.init_dist_sq = (w0 - out.minimizer).squaredNorm();
  return out;
}

GradientStats estimate_gradient_stats(std::span<const WarmupRecord> records, std::size_t devices, double safety,
                                      int min_rounds) {
  require(safety >= 1.0, ErrorCode::invalid_argument, "safety factor must be >= 1");
  GradientStats out;
  out.G_sq.assign(devices, 0.0);
  out.sigma_sq.assign(devices, 0.0);
  std::vector<int> seen(devices, 0);
  for (const auto& r : records) {
    require(r.device >= 0 && static_cast<std::size_t>(r.device) < devices, ErrorCode::invalid_argument,
            "warm-up record for an unknown device");
    const auto j = static_cast<std::size_t>(r.device);
    ++seen[j];
    out.G_sq[j] = std::max(out.G_sq[j], r.grad_norm_sq);
    out.sigma_sq[j] = std::max(out.sigma_sq[j], r.sample_variance);
  }
  for (std::size_t j = 0; j < devices; ++j) {
    require(seen[j] >= min_rounds, ErrorCode::insufficient_data,
            "device " + std::to_string(j) + " has " + std::to_string(seen[j]) + " warm-up rounds, need " +
                std::to_string(min_rounds));
    out.G_sq[j] *= safety;
  }
  return out;
}

std::vector<WarmupRecord> record_warmup(std::span<const Workload> workloads, std::span<const double> a,
                                        std::span<const double> w0, double gamma, int rounds) {
  require(workloads.size() == a.size(), ErrorCode::shape, "need one weight per workload");
  std::vector<double> w(w0.begin(), w0.end());
  std::vector<WarmupRecord> out;
  out.reserve(workloads.size() * static_cast<std::size_t>(std::max(rounds, 0)));
  for (int r = 0; r < rounds; ++r) {
    Eigen::VectorXd step = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(w.size()));
    for (std::size_t j = 0; j < workloads.size(); ++j) {
      const RowMatrix per_sample = per_sample_gradients(workloads[j], w);
      const Eigen::RowVectorXd mean = per_sample.colwise().mean();
      WarmupRecord rec;
      rec.device = static_cast<int>(j);
      rec.grad_norm_sq = mean.squaredNorm();
      rec.sample_variance = (per_sample.rowwise() - mean).rowwise().squaredNorm().mean();
      out.push_back(rec);
      step += a[j] * mean.transpose();
    }
    for (std::size_t k = 0; k < w.size(); ++k) w[k] -= gamma * step[static_cast<Eigen::Index>(k)];
  }
  return out;
}

}  // namespace sflgame
