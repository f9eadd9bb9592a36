// SPDX-License-Identifier: Apache-2.0
#include "sflgame/game_engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

#include "sflgame/error.hpp"
#include "sflgame/rng.hpp"

namespace sflgame {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Own participation at dual price mu for tau > 1.
double response_at(double price, double cost, double tau, double mu) {
  if (price <= mu) return 0.0;
  const double base = (price - mu) / (tau * cost);
  const double q = tau == 2.0 ? base : std::pow(base, 1.0 / (tau - 1.0));
  return std::min(1.0, q);
}

/// -dq/dmu of `response_at`, zero where the clamp is active.
double response_slope(double price, double cost, double tau, double mu) {
  if (price <= mu) return 0.0;
  const double base = (price - mu) / (tau * cost);
  const double r = 1.0 / (tau - 1.0);
  const double q = tau == 2.0 ? base : std::pow(base, r);
  if (q >= 1.0) return 0.0;
  return r * q / (price - mu);
}

/// tau * c * x^(tau - 1): price that yields participation x when mu = 0.
double marginal_cost(double cost, double tau, double x) {
  if (tau == 2.0) return 2.0 * cost * x;
  return tau * cost * std::pow(x, tau - 1.0);
}

/// x^2 times the derivative of `marginal_cost` in x.
double curvature_term(double cost, double tau, double x) {
  if (tau == 2.0) return 2.0 * cost * x * x;
  return tau * (tau - 1.0) * cost * std::pow(x, tau);
}

/// Bisects a decreasing function f on [lo, hi] for the smallest point where
/// f <= target. Assumes f(lo) > target >= f(hi).
template <class F>
double bisect_decreasing(F&& f, double lo, double hi, double target) {
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (f(mid) > target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return hi;
}

/// Participation other tenants demand from one device as a function of the
/// dual price mu.
struct Competition {
  std::vector<double> price;
  std::vector<double> cost;
  double tau = 2.0;

  double demand(double mu) const {
    double s = 0.0;
    for (std::size_t k = 0; k < price.size(); ++k) s += response_at(price[k], cost[k], tau, mu);
    return s;
  }
  double slope(double mu) const {
    double s = 0.0;
    for (std::size_t k = 0; k < price.size(); ++k) s += response_slope(price[k], cost[k], tau, mu);
    return s;
  }
  double top() const {
    double t = 0.0;
    for (double p : price) t = std::max(t, p);
    return t;
  }
};

/// Cheapest price path for one (tenant, device) pair: for target x the price
/// is mu(x) + tau c x^(tau-1), with mu(x) = 0 while the others leave room.
class ResponseCurve {
 public:
  struct Point {
    double x = 0.0;
    double price = 0.0;
  };

  ResponseCurve(const PricingProfile& P, const GameInstance& game, int i, int j) {
    const int m = game.tenants();
    cost_ = game.cost(i, j);
    tau_ = game.tau(j);
    comp_.tau = tau_;
    for (int k = 0; k < m; ++k) {
      if (k == i || P(k, j) <= 0.0) continue;
      comp_.price.push_back(P(k, j));
      comp_.cost.push_back(game.cost(k, j));
    }
    const double s0 = comp_.demand(0.0);
    x_free_ = s0 < 1.0 ? 1.0 - s0 : 0.0;
    mu_top_ = comp_.top();
  }

  /// Dual price at which the others leave exactly 1 - x.
  double mu_for(double x) const {
    if (x <= x_free_) return 0.0;
    if (x >= 1.0) return mu_top_;
    return bisect_decreasing([&](double mu) { return comp_.demand(mu); }, 0.0, mu_top_, 1.0 - x);
  }

  double price_for(double x) const {
    if (x <= 0.0) return 0.0;
    return mu_for(x) + marginal_cost(cost_, tau_, std::min(x, 1.0));
  }

  /// Sets the participation floor; must be called before `solve`.
  void set_floor(double x_lo) {
    x_lo_ = x_lo;
    mu_lo_ = mu_for(x_lo);
    price_lo_ = price_for(x_lo);
  }
  double floor_price() const { return price_lo_; }
  double full_price() const { return price_for(1.0); }

  /// Participation where lambda * x^2 * dPrice/dx = w, clipped to [x_lo, 1].
  Point solve(double lambda, double w) const {
    if (w <= 0.0) return {x_lo_, price_lo_};
    auto g_free = [&](double x) { return lambda * curvature_term(cost_, tau_, x) - w; };
    auto b_point = [&](double mu) { return std::min(1.0, 1.0 - comp_.demand(mu)); };
    auto g_bound = [&](double mu) {
      const double x = b_point(mu);
      const double s = comp_.slope(mu);
      const double inv = s > 0.0 ? x * x / s : kInf;
      return lambda * (inv + curvature_term(cost_, tau_, x)) - w;
    };
    const bool free_nonempty = x_lo_ < x_free_;
    if (free_nonempty) {
      if (g_free(x_lo_) >= 0.0) return {x_lo_, price_lo_};
      const double x_end = std::min(1.0, x_free_);
      if (g_free(x_end) >= 0.0 || x_end >= 1.0) {
        double lo = x_lo_;
        double hi = x_end;
        if (g_free(hi) < 0.0) return {hi, price_for(hi)};
        for (int it = 0; it < 200; ++it) {
          const double mid = 0.5 * (lo + hi);
          if (mid <= lo || mid >= hi) break;
          (g_free(mid) < 0.0 ? lo : hi) = mid;
        }
        return {hi, marginal_cost(cost_, tau_, hi)};
      }
    }
    double lo = free_nonempty ? 0.0 : mu_lo_;
    double hi = mu_top_;
    if (!free_nonempty && g_bound(lo) >= 0.0) return {x_lo_, price_lo_};
    if (g_bound(hi) <= 0.0) return {1.0, mu_top_ + marginal_cost(cost_, tau_, 1.0)};
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      (g_bound(mid) < 0.0 ? lo : hi) = mid;
    }
    const double x = std::max(x_lo_, b_point(hi));
    return {x, hi + marginal_cost(cost_, tau_, x)};
  }

 private:
  Competition comp_;
  double cost_ = 1.0;
  double tau_ = 2.0;
  double x_free_ = 1.0;
  double mu_top_ = 0.0;
  double x_lo_ = 0.0;
  double mu_lo_ = 0.0;
  double price_lo_ = 0.0;
};

Eigen::VectorXd response_column(const PricingProfile& P, const GameInstance& game, int j) {
  const Eigen::VectorXd prices = P.col(j);
  const Eigen::VectorXd costs = game.cost.col(j);
  return device_best_response({prices.data(), static_cast<std::size_t>(prices.size())},
                              {costs.data(), static_cast<std::size_t>(costs.size())}, game.tau(j))
      .q;
}

/// Tenant i's disutility if it switched to `row`, others fixed.
BoundValue own_disutility(const PricingProfile& P, const GameInstance& game, int i, const Eigen::VectorXd& row) {
  PricingProfile trial = P;
  trial.row(i) = row.transpose();
  double sum = 0.0;
  for (int j = 0; j < game.devices(); ++j) {
    const double w = game.weight(i, j);
    if (w == 0.0) continue;
    const double q = response_column(trial, game, j)(i);
    if (q <= 0.0) return BoundValue::infinity();
    sum += (1.0 - q) * w / q;
  }
  return BoundValue::finite(sum) * game.scale(i);
}

Eigen::VectorXd dirichlet_point(Rng& rng, const Eigen::VectorXd& floors, double budget,
                                const std::vector<int>& support) {
  Eigen::VectorXd row = floors;
  const double slack = budget - floors.sum();
  if (support.empty() || slack <= 0.0) return row;
  std::vector<double> e(support.size());
  double total = 0.0;
  for (auto& v : e) {
    double u = rng.uniform();
    while (u <= 0.0) u = rng.uniform();
    v = -std::log(u);
    total += v;
  }
  for (std::size_t k = 0; k < support.size(); ++k) row(support[k]) += slack * e[k] / total;
  return row;
}

PotentialValue accumulate(const std::vector<BoundValue>& terms) {
  PotentialValue p;
  for (const auto& t : terms) {
    if (t.is_infinite()) {
      ++p.infinite_terms;
    } else {
      p.finite_part += t.to_double();
    }
  }
  return p;
}

std::vector<BoundValue> disutilities(const ParticipationProfile& q, const GameInstance& game) {
  std::vector<BoundValue> out;
  for (int i = 0; i < game.tenants(); ++i) out.push_back(tenant_disutility(i, q, game));
  return out;
}

std::vector<int> support_of(const GameInstance& game, int i) {
  std::vector<int> s;
  for (int j = 0; j < game.devices(); ++j) {
    if (game.eligible(i, j)) s.push_back(j);
  }
  return s;
}

}  // namespace

// ---------------------------------------------------------------------------
// Device side

DeviceResponse device_best_response(std::span<const double> prices, std::span<const double> costs, double tau) {
  require(prices.size() == costs.size(), ErrorCode::shape, "prices and costs differ in length");
  require(tau >= 1.0, ErrorCode::invalid_argument, "cost exponent must be >= 1");
  const std::size_t m = prices.size();
  for (std::size_t i = 0; i < m; ++i) {
    require(costs[i] > 0.0, ErrorCode::invalid_argument, "device costs must be > 0");
    require(prices[i] >= 0.0 && std::isfinite(prices[i]), ErrorCode::invalid_argument, "prices must be >= 0");
  }
  DeviceResponse out;
  out.q = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m));
  if (m == 0) return out;

  if (tau == 1.0) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < m; ++i) {
      if (prices[i] - costs[i] > prices[best] - costs[best]) best = i;
    }
    const double margin = prices[best] - costs[best];
    if (margin > 0.0) {
      out.q(static_cast<Eigen::Index>(best)) = 1.0;
      out.mu = margin;
    }
    return out;
  }

  auto total = [&](double mu) {
    double s = 0.0;
    for (std::size_t i = 0; i < m; ++i) s += response_at(prices[i], costs[i], tau, mu);
    return s;
  };
  if (total(0.0) > 1.0) {
    double top = 0.0;
    for (double p : prices) top = std::max(top, p);
    out.mu = bisect_decreasing(total, 0.0, top, 1.0);
  }
  for (std::size_t i = 0; i < m; ++i) {
    out.q(static_cast<Eigen::Index>(i)) = response_at(prices[i], costs[i], tau, out.mu);
  }
  return out;
}

double device_utility(std::span<const double> prices, std::span<const double> costs, double tau,
                      std::span<const double> q) {
  double u = 0.0;
  for (std::size_t i = 0; i < prices.size(); ++i) u += q[i] * prices[i] - costs[i] * std::pow(q[i], tau);
  return u;
}

double KktResiduals::max() const { return std::max({stationarity, complementarity, primal, dual}); }

KktResiduals kkt_residuals(std::span<const double> prices, std::span<const double> costs, double tau,
                           const DeviceResponse& response) {
  KktResiduals r;
  double sum = 0.0;
  for (std::size_t i = 0; i < prices.size(); ++i) {
    const double q = response.q(static_cast<Eigen::Index>(i));
    sum += q;
    const double marginal = tau == 1.0 ? costs[i] : tau * costs[i] * std::pow(q, tau - 1.0);
    const double g = prices[i] - marginal - response.mu;
    double s = 0.0;
    if (q <= 0.0) {
      s = std::max(0.0, g);  // lower-bound multiplier -g must be >= 0
    } else if (q >= 1.0) {
      s = std::max(0.0, -g);  // upper-bound multiplier g must be >= 0
    } else {
      s = std::abs(g);
    }
    r.stationarity = std::max(r.stationarity, s);
    r.primal = std::max({r.primal, -q, q - 1.0});
  }
  r.primal = std::max(r.primal, sum - 1.0);
  r.complementarity = std::abs(response.mu * (1.0 - sum));
  r.dual = std::max(0.0, -response.mu);
  return r;
}

// ---------------------------------------------------------------------------
// Game instance

void GameInstance::validate() const {
  const auto m = cost.rows();
  const auto n = cost.cols();
  require(m >= 1 && n >= 1, ErrorCode::invalid_scenario, "game needs at least one tenant and one device");
  require(tau.size() == n && budget.size() == m && weight.rows() == m && weight.cols() == n &&
              data_share.rows() == m && data_share.cols() == n && scale.size() == m,
          ErrorCode::shape, "game matrices have inconsistent shapes");
  require((cost.array() > 0.0).all(), ErrorCode::invalid_scenario, "device costs must be > 0");
  require((tau.array() > 1.0).all(), ErrorCode::invalid_scenario,
          "the pricing game needs cost exponents > 1 (linear costs give all-or-nothing responses)");
  require((budget.array() > 0.0).all(), ErrorCode::invalid_scenario, "budgets must be > 0");
  require((weight.array() >= 0.0).all() && (scale.array() >= 0.0).all(), ErrorCode::invalid_scenario,
          "disutility weights must be >= 0");
  require(q_floor > 0.0 && q_floor < 1.0, ErrorCode::invalid_scenario, "participation floor must be in (0, 1)");
  require(eps_improve > 0.0, ErrorCode::invalid_scenario, "improvement threshold must be > 0");
}

GameInstance make_game(std::span<const BoundParams> bounds, std::span<const int> cycles,
                       std::span<const TenantSpec> tenants, std::span<const DeviceSpec> devices, double q_floor,
                       double eps_improve, std::uint64_t seed) {
  const auto m = static_cast<Eigen::Index>(tenants.size());
  const auto n = static_cast<Eigen::Index>(devices.size());
  require(bounds.size() == tenants.size() && cycles.size() == tenants.size(), ErrorCode::shape,
          "need bound constants and a cycle count per tenant");
  GameInstance g;
  g.cost.resize(m, n);
  g.weight.resize(m, n);
  g.data_share.resize(m, n);
  g.tau.resize(n);
  g.budget.resize(m);
  g.scale.resize(m);
  g.q_floor = q_floor;
  g.eps_improve = eps_improve;
  g.seed = seed;
  for (Eigen::Index j = 0; j < n; ++j) g.tau(j) = devices[static_cast<std::size_t>(j)].cost_exponent;
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto& t = tenants[static_cast<std::size_t>(i)];
    const auto& b = bounds[static_cast<std::size_t>(i)];
    require(b.a.size() == devices.size() && b.G_sq.size() == devices.size(), ErrorCode::shape,
            "bound constants for tenant " + std::to_string(t.id) + " do not cover every device");
    const int k = cycles[static_cast<std::size_t>(i)];
    require(k >= 1, ErrorCode::infeasible_deadline, "tenant " + std::to_string(t.id) + " has K < 1");
    g.budget(i) = t.budget;
    g.scale(i) = bound_terms(b).alpha / k;
    for (Eigen::Index j = 0; j < n; ++j) {
      const auto ju = static_cast<std::size_t>(j);
      g.cost(i, j) = devices[ju].cost_for(t);
      g.data_share(i, j) = b.a[ju];
      g.weight(i, j) = b.a[ju] * b.a[ju] * b.G_sq[ju];
    }
  }
  g.validate();
  return g;
}

ParticipationProfile all_device_responses(const PricingProfile& P, const GameInstance& game) {
  require(P.rows() == game.cost.rows() && P.cols() == game.cost.cols(), ErrorCode::shape,
          "price matrix shape does not match the game");
  ParticipationProfile q(P.rows(), P.cols());
  for (int j = 0; j < game.devices(); ++j) q.col(j) = response_column(P, game, j);
  return q;
}

BoundValue tenant_disutility(std::span<const double> q_row, std::span<const double> weight_row, double scale) {
  require(q_row.size() == weight_row.size(), ErrorCode::shape, "q and weight rows differ in length");
  double sum = 0.0;
  for (std::size_t j = 0; j < q_row.size(); ++j) {
    require(q_row[j] >= 0.0 && q_row[j] <= 1.0, ErrorCode::invalid_argument, "participation level outside [0, 1]");
    if (weight_row[j] == 0.0) continue;
    if (q_row[j] == 0.0) return BoundValue::infinity();
    sum += (1.0 - q_row[j]) * weight_row[j] / q_row[j];
  }
  return BoundValue::finite(sum) * scale;
}

BoundValue tenant_disutility(std::span<const double> q_row, const BoundParams& params, int K) {
  require(K >= 1, ErrorCode::invalid_argument, "K must be >= 1");
  return participation_penalty(params.a, params.G_sq, q_row) * (bound_terms(params).alpha / K);
}

BoundValue tenant_disutility(int i, const ParticipationProfile& q, const GameInstance& game) {
  const Eigen::VectorXd qi = q.row(i).transpose();
  const Eigen::VectorXd wi = game.weight.row(i).transpose();
  return tenant_disutility({qi.data(), static_cast<std::size_t>(qi.size())},
                           {wi.data(), static_cast<std::size_t>(wi.size())}, game.scale(i));
}

BoundValue PotentialValue::value() const {
  return infinite_terms > 0 ? BoundValue::infinity() : BoundValue::finite(finite_part);
}

bool PotentialValue::improves_on(const PotentialValue& other, double eps) const {
  if (infinite_terms != other.infinite_terms) return infinite_terms < other.infinite_terms;
  return finite_part < other.finite_part - eps;
}

PotentialValue potential_of_responses(const ParticipationProfile& q, const GameInstance& game) {
  return accumulate(disutilities(q, game));
}

PotentialValue potential(const PricingProfile& P, const GameInstance& game) {
  return potential_of_responses(all_device_responses(P, game), game);
}

// ---------------------------------------------------------------------------
// Tenant side

double inducing_price(const PricingProfile& P, const GameInstance& game, int i, int j, double q_target) {
  require(q_target >= 0.0 && q_target <= 1.0, ErrorCode::invalid_argument, "target participation outside [0, 1]");
  return ResponseCurve(P, game, i, j).price_for(q_target);
}

Eigen::VectorXd price_floors(const PricingProfile& P, const GameInstance& game, int i) {
  Eigen::VectorXd floors = Eigen::VectorXd::Zero(game.devices());
  for (int j = 0; j < game.devices(); ++j) {
    if (game.eligible(i, j)) floors(j) = inducing_price(P, game, i, j, game.q_floor);
  }
  return floors;
}

void fit_to_budget(Eigen::VectorXd& row, double budget) {
  // Leave room for summation-order rounding so any later re-summation of the
  // row also stays within the budget.
  const double cap = budget * (1.0 - 4.0 * std::numeric_limits<double>::epsilon() * static_cast<double>(row.size()));
  for (int guard = 0; guard < 64 && row.sum() > cap; ++guard) {
    const double s = row.sum();
    row *= std::nextafter(cap / s, 0.0);
  }
  require(row.sum() <= budget, ErrorCode::budget_infeasible, "could not fit prices into the budget");
}

std::optional<TenantProposal> tenant_best_response(const PricingProfile& P, const GameInstance& game, int i,
                                                   const BestResponseOptions& options, const StrategySpace& space) {
  const Eigen::VectorXd current_row = P.row(i).transpose();
  const double budget = game.budget(i);
  require(current_row.sum() <= budget * (1.0 + 1e-12), ErrorCode::budget_infeasible,
          "current prices of tenant " + std::to_string(i) + " exceed the budget");
  const BoundValue current = own_disutility(P, game, i, current_row);

  Eigen::VectorXd best_row = current_row;
  BoundValue best = current;
  auto consider = [&](const Eigen::VectorXd& row) {
    const BoundValue v = own_disutility(P, game, i, row);
    if (v < best) {
      best = v;
      best_row = row;
    }
  };

  if (space.discrete()) {
    for (const auto& row : space.rows[static_cast<std::size_t>(i)]) consider(row);
  } else {
    const int n = game.devices();
    std::vector<ResponseCurve> curves;
    curves.reserve(static_cast<std::size_t>(n));
    Eigen::VectorXd floors = Eigen::VectorXd::Zero(n);
    double full_spend = 0.0;
    for (int j = 0; j < n; ++j) {
      curves.emplace_back(P, game, i, j);
      if (game.eligible(i, j)) {
        curves.back().set_floor(game.q_floor);
        floors(j) = curves.back().floor_price();
        full_spend += curves.back().full_price();
      }
    }
    require(floors.sum() <= budget, ErrorCode::budget_infeasible,
            "tenant " + std::to_string(i) + " cannot afford the participation floor on every device");

    auto allocate = [&](double lambda) {
      Eigen::VectorXd row = Eigen::VectorXd::Zero(n);
      for (int j = 0; j < n; ++j) {
        if (game.eligible(i, j)) row(j) = curves[static_cast<std::size_t>(j)].solve(lambda, game.weight(i, j)).price;
      }
      return row;
    };
    Eigen::VectorXd row;
    if (full_spend <= budget) {
      row = allocate(0.0);
    } else {
      double hi = 1.0;
      for (int it = 0; it < 400 && allocate(hi).sum() > budget; ++it) hi *= 4.0;
      double lo = hi;
      for (int it = 0; it < 400 && allocate(lo).sum() <= budget; ++it) lo *= 0.25;
      for (int it = 0; it < 100; ++it) {
        const double mid = std::sqrt(lo * hi);
        if (mid <= lo || mid >= hi) break;
        (allocate(mid).sum() > budget ? lo : hi) = mid;
      }
      row = allocate(hi);
    }
    fit_to_budget(row, budget);
    consider(row);

    Rng rng(derive_seed(game.seed, options.stream, static_cast<std::uint64_t>(i)));
    const auto support = support_of(game, i);
    for (int s = 0; s < options.multistart; ++s) {
      Eigen::VectorXd start = dirichlet_point(rng, floors, budget, support);
      fit_to_budget(start, budget);
      consider(start);
    }
  }

  if (!(best + BoundValue::finite(game.eps_improve) < current)) return std::nullopt;
  return TenantProposal{best_row, best};
}

namespace {

/// Per-device menu for one tenant: participation grid, the price that
/// induces each level, the tenant's own term and the other tenants' terms.
struct DeviceMenu {
  std::vector<double> price;
  std::vector<double> own;
  std::vector<double> others;
  std::vector<int> others_inf;
};

DeviceMenu build_menu(const PricingProfile& P, const GameInstance& game, int i, int j, int grid) {
  DeviceMenu menu;
  const ResponseCurve curve(P, game, i, j);
  const double x_lo = game.q_floor;
  const int half = std::max(2, grid / 2);
  std::vector<double> xs;
  for (int k = 0; k < half; ++k) {
    const double t = static_cast<double>(k) / (half - 1);
    xs.push_back(x_lo * std::pow(1.0 / x_lo, t));
    xs.push_back(x_lo + (1.0 - x_lo) * t);
  }
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  const double tau = game.tau(j);
  for (double x : xs) {
    const double mu = curve.mu_for(x);
    menu.price.push_back(mu + marginal_cost(game.cost(i, j), tau, x));
    menu.own.push_back(game.scale(i) * game.weight(i, j) * (1.0 - x) / x);
    double finite = 0.0;
    int inf = 0;
    for (int k = 0; k < game.tenants(); ++k) {
      if (k == i || game.weight(k, j) == 0.0) continue;
      const double qk = response_at(P(k, j), game.cost(k, j), tau, mu);
      if (qk <= 0.0) {
        ++inf;
      } else {
        finite += game.scale(k) * game.weight(k, j) * (1.0 - qk) / qk;
      }
    }
    menu.others.push_back(finite);
    menu.others_inf.push_back(inf);
  }
  return menu;
}

/// Minimizer of (1 + eta) * own + others over the menus subject to the
/// budget, via a multiplier on spend.
Eigen::VectorXd weighted_allocation(const std::vector<DeviceMenu>& menus, const std::vector<int>& support, int n,
                                    double eta, double budget) {
  auto allocate = [&](double lambda) {
    Eigen::VectorXd row = Eigen::VectorXd::Zero(n);
    for (std::size_t s = 0; s < support.size(); ++s) {
      const DeviceMenu& m = menus[s];
      std::size_t best = 0;
      double best_v = kInf;
      int best_inf = std::numeric_limits<int>::max();
      for (std::size_t k = 0; k < m.price.size(); ++k) {
        const double v = (1.0 + eta) * m.own[k] + m.others[k] + lambda * m.price[k];
        if (m.others_inf[k] < best_inf || (m.others_inf[k] == best_inf && v < best_v)) {
          best = k;
          best_v = v;
          best_inf = m.others_inf[k];
        }
      }
      row(support[s]) = m.price[best];
    }
    return row;
  };
  if (allocate(0.0).sum() <= budget) return allocate(0.0);
  double hi = 1.0;
  for (int it = 0; it < 400 && allocate(hi).sum() > budget; ++it) hi *= 4.0;
  double lo = hi;
  for (int it = 0; it < 400 && allocate(lo).sum() <= budget; ++it) lo *= 0.25;
  for (int it = 0; it < 100; ++it) {
    const double mid = std::sqrt(lo * hi);
    if (mid <= lo || mid >= hi) break;
    (allocate(mid).sum() > budget ? lo : hi) = mid;
  }
  return allocate(hi);
}

}  // namespace

std::optional<TenantProposal> tenant_proposal(const PricingProfile& P, const GameInstance& game, int i,
                                              const BestResponseOptions& options, const StrategySpace& space) {
  const Eigen::VectorXd current_row = P.row(i).transpose();
  const double budget = game.budget(i);
  const BoundValue current = own_disutility(P, game, i, current_row);

  std::optional<TenantProposal> best;
  PotentialValue best_potential;
  auto consider = [&](const Eigen::VectorXd& row) {
    if (row.sum() > budget) return;
    PricingProfile trial = P;
    trial.row(i) = row.transpose();
    const ParticipationProfile q = all_device_responses(trial, game);
    const BoundValue own = tenant_disutility(i, q, game);
    if (!(own + BoundValue::finite(game.eps_improve) < current)) return;
    const PotentialValue v = potential_of_responses(q, game);
    if (!best || v.improves_on(best_potential, 0.0)) {
      best = TenantProposal{row, own};
      best_potential = v;
    }
  };

  if (space.discrete()) {
    for (const auto& row : space.rows[static_cast<std::size_t>(i)]) consider(row);
    return best;
  }

  std::vector<Eigen::VectorXd> anchors;
  if (auto br = tenant_best_response(P, game, i, options, space)) anchors.push_back(br->prices);
  const auto support = support_of(game, i);
  std::vector<DeviceMenu> menus;
  menus.reserve(support.size());
  for (int j : support) menus.push_back(build_menu(P, game, i, j, 96));
  for (double eta : {0.0, 0.25, 1.0, 4.0, 16.0}) {
    Eigen::VectorXd row = weighted_allocation(menus, support, game.devices(), eta, budget);
    fit_to_budget(row, budget);
    anchors.push_back(std::move(row));
  }
  for (const auto& a : anchors) {
    consider(a);
    for (double t : {0.5, 0.25, 0.125, 0.0625}) {
      Eigen::VectorXd row = current_row + t * (a - current_row);
      fit_to_budget(row, budget);
      consider(row);
    }
  }
  return best;
}

std::optional<int> select_winner(std::span<const std::optional<TenantProposal>> proposals, const PricingProfile& P,
                                 const GameInstance& game) {
  const PotentialValue now = potential(P, game);
  std::optional<int> winner;
  PotentialValue best = now;
  for (std::size_t i = 0; i < proposals.size(); ++i) {
    if (!proposals[i]) continue;
    require(proposals[i]->prices.sum() <= game.budget(static_cast<Eigen::Index>(i)), ErrorCode::budget_infeasible,
            "proposal of tenant " + std::to_string(i) + " exceeds its budget");
    PricingProfile trial = P;
    trial.row(static_cast<Eigen::Index>(i)) = proposals[i]->prices.transpose();
    const PotentialValue v = potential(trial, game);
    if (!v.improves_on(now, game.eps_improve)) continue;
    if (!winner || v.improves_on(best, 0.0)) {
      winner = static_cast<int>(i);
      best = v;
    }
  }
  return winner;
}

PrinceResult run_prince(const GameInstance& game, const PrinceOptions& options) {
  game.validate();
  const int m = game.tenants();
  const int n = game.devices();
  PrinceResult result;
  if (options.start) {
    result.P = *options.start;
  } else {
    result.P.resize(m, n);
    for (int i = 0; i < m; ++i) {
      Eigen::VectorXd row = Eigen::VectorXd::Constant(n, game.budget(i) / n);
      fit_to_budget(row, game.budget(i));
      result.P.row(i) = row.transpose();
    }
  }
  auto record = [&](int iter, int winner) {
    const ParticipationProfile q = all_device_responses(result.P, game);
    GameIteration it;
    it.iter = iter;
    it.winner = winner;
    it.disutility = disutilities(q, game);
    it.potential = accumulate(it.disutility);
    result.trace.iterations.push_back(std::move(it));
    result.q = q;
  };
  record(0, -1);

  std::vector<std::optional<TenantProposal>> proposals(static_cast<std::size_t>(m));
  for (int iter = 1;; ++iter) {
    require(iter <= options.max_iterations, ErrorCode::non_convergence,
            "no equilibrium after " + std::to_string(options.max_iterations) + " iterations");
    auto propose = [&](int i) {
      BestResponseOptions bro;
      bro.multistart = options.multistart;
      bro.stream = static_cast<std::uint64_t>(iter);
      proposals[static_cast<std::size_t>(i)] = tenant_proposal(result.P, game, i, bro, options.space);
    };
    const int workers = std::clamp(options.workers, 1, m);
    if (workers == 1) {
      for (int i = 0; i < m; ++i) propose(i);
    } else {
      std::vector<std::thread> pool;
      std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
      for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
          try {
            for (int i = w; i < m; i += workers) propose(i);
          } catch (...) {
            errors[static_cast<std::size_t>(w)] = std::current_exception();
          }
        });
      }
      for (auto& t : pool) t.join();
      for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
      }
    }
    const auto winner = select_winner(proposals, result.P, game);
    if (!winner) break;
    const PotentialValue before = result.trace.iterations.back().potential;
    result.P.row(*winner) = proposals[static_cast<std::size_t>(*winner)]->prices.transpose();
    require(result.P.row(*winner).sum() <= game.budget(*winner), ErrorCode::budget_infeasible,
            "approved prices exceed the budget");
    ++result.approved;
    record(iter, *winner);
    require(result.trace.iterations.back().potential.improves_on(before, 0.0), ErrorCode::non_convergence,
            "approved update did not lower the potential");
  }
  return result;
}

EquilibriumReport verify_equilibrium(const PricingProfile& P, const GameInstance& game, int n_probes,
                                     const StrategySpace& space) {
  EquilibriumReport report;
  const int n = game.devices();
  for (int i = 0; i < game.tenants(); ++i) {
    const Eigen::VectorXd current_row = P.row(i).transpose();
    TenantCertificate cert;
    cert.current = own_disutility(P, game, i, current_row);
    cert.best_found = cert.current;
    auto probe = [&](const Eigen::VectorXd& row) {
      const BoundValue v = own_disutility(P, game, i, row);
      if (v < cert.best_found) cert.best_found = v;
    };
    if (space.discrete()) {
      for (const auto& row : space.rows[static_cast<std::size_t>(i)]) probe(row);
    } else {
      Rng rng(derive_seed(game.seed, 0x5eed, static_cast<std::uint64_t>(i)));
      const auto support = support_of(game, i);
      const Eigen::VectorXd zero = Eigen::VectorXd::Zero(n);
      const double local_scale = 0.05 * game.budget(i) / n;
      for (int k = 0; k < n_probes; ++k) {
        Eigen::VectorXd row;
        if (k % 2 == 0) {
          row = dirichlet_point(rng, zero, game.budget(i), support);
        } else {
          row = current_row;
          for (int j : support) row(j) = std::max(0.0, row(j) + local_scale * rng.normal());
        }
        fit_to_budget(row, game.budget(i));
        probe(row);
      }
    }
    BestResponseOptions bro;
    bro.stream = 0xbe57;
    try {
      if (auto br = tenant_best_response(P, game, i, bro, space)) probe(br->prices);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::budget_infeasible) throw;
    }
    cert.passed = !(cert.best_found + BoundValue::finite(game.eps_improve) < cert.current);
    report.passed = report.passed && cert.passed;
    report.tenants.push_back(cert);
  }
  return report;
}

void write_game_trace_csv(std::ostream& out, const GameTrace& trace) {
  const auto old_precision = out.precision(17);
  const std::size_t m = trace.iterations.empty() ? 0 : trace.iterations.front().disutility.size();
  out << "iter,winner,potential";
  for (std::size_t i = 1; i <= m; ++i) out << ",lambda_" << i;
  out << '\n';
  for (const auto& it : trace.iterations) {
    out << it.iter << ',' << it.winner << ',' << it.potential.value().to_string();
    for (const auto& d : it.disutility) out << ',' << d.to_string();
    out << '\n';
  }
  out.precision(old_precision);
}

}  // namespace sflgame
