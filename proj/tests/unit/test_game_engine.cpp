// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "expect_error.hpp"
#include "support/testbed.hpp"

using namespace sflgame;

namespace {

std::vector<double> col(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

/// Game with explicit matrices; scale 1 unless given.
GameInstance tiny(Eigen::MatrixXd cost, Eigen::MatrixXd weight, Eigen::VectorXd budget, double tau = 2.0) {
  GameInstance g;
  g.cost = std::move(cost);
  g.weight = std::move(weight);
  g.data_share = Eigen::MatrixXd::Constant(g.cost.rows(), g.cost.cols(), 1.0 / static_cast<double>(g.cost.cols()));
  g.tau = Eigen::VectorXd::Constant(g.cost.cols(), tau);
  g.budget = std::move(budget);
  g.scale = Eigen::VectorXd::Ones(g.cost.rows());
  return g;
}

/// Independent disutility: scale * sum (1 - q) w / q.
double hand_disutility(const GameInstance& g, const Eigen::MatrixXd& q, int i) {
  double s = 0.0;
  for (int j = 0; j < g.devices(); ++j) s += (1.0 - q(i, j)) * g.weight(i, j) / q(i, j);
  return g.scale(i) * s;
}

}  // namespace

TEST_CASE("device best response examples") {
  auto r = device_best_response(std::vector<double>{0.6}, std::vector<double>{0.5}, 2.0);
  CHECK(r.q(0) == doctest::Approx(0.6));
  CHECK(r.mu == 0.0);

  r = device_best_response(std::vector<double>{1.0, 1.0}, std::vector<double>{0.5, 0.5}, 2.0);
  CHECK(r.mu == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(r.q(0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(r.q(1) == doctest::Approx(0.5).epsilon(1e-12));

  r = device_best_response(std::vector<double>{0.0, 0.0, 0.0}, std::vector<double>{1, 1, 1}, 1.5);
  CHECK(r.q.isZero());

  r = device_best_response(std::vector<double>{1.0, 2.0, 1.8}, std::vector<double>{0.5, 1.0, 0.5}, 1.0);
  CHECK(r.q(2) == 1.0);
  CHECK(r.q(0) + r.q(1) == 0.0);

  CHECK_ERROR_CODE(device_best_response(std::vector<double>{1.0}, std::vector<double>{0.0}, 2.0),
                   ErrorCode::invalid_argument);
}

TEST_CASE("device response beats a utility grid and satisfies KKT") {
  Rng rng(31);
  for (int t = 0; t < 300; ++t) {
    const double tau = std::vector<double>{1.0, 1.5, 2.0, 3.0}[rng.below(4)];
    const std::vector<double> P{rng.uniform(0, 3), rng.uniform(0, 3)};
    const std::vector<double> c{rng.uniform(0.1, 2), rng.uniform(0.1, 2)};
    const auto r = device_best_response(P, c, tau);
    const double u = device_utility(P, c, tau, col(r.q));
    double best = -1e300;
    for (int a = 0; a <= 100; ++a) {
      for (int b = 0; a + b <= 100; ++b) {
        const std::vector<double> q{a / 100.0, b / 100.0};
        best = std::max(best, device_utility(P, c, tau, q));
      }
    }
    CHECK(best - u <= 1e-6);
    CHECK(kkt_residuals(P, c, tau, r).max() < 1e-8);
    CHECK(r.q.sum() <= 1.0 + 1e-12);
    CHECK((r.q.array() >= 0.0).all());
  }
}

TEST_CASE("raising a price never lowers that tenant's participation") {
  Rng rng(32);
  for (int t = 0; t < 300; ++t) {
    std::vector<double> P{rng.uniform(0, 2), rng.uniform(0, 2), rng.uniform(0, 2)};
    const std::vector<double> c{rng.uniform(0.1, 1), rng.uniform(0.1, 1), rng.uniform(0.1, 1)};
    const auto before = device_best_response(P, c, 2.0);
    const auto k = rng.below(3);
    P[k] += rng.uniform(0, 0.5);
    const auto after = device_best_response(P, c, 2.0);
    CHECK(after.q(static_cast<Eigen::Index>(k)) >= before.q(static_cast<Eigen::Index>(k)) - 1e-12);
  }
}

TEST_CASE("all_device_responses applies the device rule per column") {
  const GameInstance g = testbed::make_game(3, 5, 33);
  PricingProfile P = Eigen::MatrixXd::Random(3, 5).cwiseAbs();
  const auto q = all_device_responses(P, g);
  for (int j = 0; j < 5; ++j) {
    const auto r = device_best_response(col(P.col(j)), col(g.cost.col(j)), g.tau(j));
    CHECK((q.col(j) - r.q).norm() == 0.0);
    CHECK(q.col(j).sum() <= 1.0 + 1e-12);
  }
  CHECK_ERROR_CODE(all_device_responses(Eigen::MatrixXd::Ones(2, 5), g), ErrorCode::shape);
}

TEST_CASE("tenant disutility") {
  const std::vector<double> ones{1.0, 1.0}, w{1.0, 1.0};
  CHECK(tenant_disutility(ones, w, 3.0).to_double() == 0.0);
  const std::vector<double> half{0.5, 0.5};
  CHECK(tenant_disutility(half, w, 1.0).to_double() == doctest::Approx(2.0));
  const std::vector<double> starved{0.0, 0.5};
  CHECK(tenant_disutility(starved, w, 1.0).is_infinite());

  const auto tb = testbed::make_quadratic(4, 3, 2, 34);
  const std::vector<double> q{0.3, 0.7, 0.5, 0.9};
  const int K = 17;
  const double lhs = tenant_disutility(q, tb.stats.params, K).to_double();
  const double rhs = optimality_gap_bound(tb.stats.params, q, K).to_double() - bound_terms(tb.stats.params).beta / K;
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
}

TEST_CASE("potential is the sum of disutilities") {
  const GameInstance g = testbed::make_game(3, 6, 35);
  Rng rng(36);
  for (int t = 0; t < 20; ++t) {
    PricingProfile P(3, 6);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 6; ++j) P(i, j) = rng.uniform(0.05, 1.0);
    const auto q = all_device_responses(P, g);
    if ((q.array() <= 0.0).any()) continue;
    double want = 0.0;
    for (int i = 0; i < 3; ++i) want += hand_disutility(g, q, i);
    const PotentialValue v = potential(P, g);
    CHECK(v.infinite_terms == 0);
    CHECK(v.finite_part == doctest::Approx(want).epsilon(1e-12));
  }
  const auto full = ParticipationProfile::Constant(3, 6, 1.0);
  CHECK(potential_of_responses(full, g).value().to_double() == 0.0);
}

TEST_CASE("potential orders infinite terms first") {
  PotentialValue a{1, 0.0}, b{0, 1e9}, c{0, 5.0};
  CHECK(b.improves_on(a, 0.0));
  CHECK(c.improves_on(b, 1e-6));
  CHECK(!c.improves_on(c, 0.0));
  CHECK(a.value().is_infinite());
}

TEST_CASE("select_winner picks the largest potential decrease") {
  // Two tenants on one device, no contention, disutility (1 - q) / q.
  Eigen::MatrixXd cost(2, 1), weight(2, 1);
  cost << 0.5, 0.5;
  weight << 1.0, 1.0;
  Eigen::VectorXd budget(2);
  budget << 1.0, 1.0;
  const GameInstance g = tiny(cost, weight, budget);
  PricingProfile P(2, 1);
  P << 0.2, 0.2;  // q = 0.2 each, disutility 4
  auto proposal = [](double target_disutility) {
    Eigen::VectorXd row(1);
    row << 1.0 / (1.0 + target_disutility);
    return TenantProposal{row, BoundValue::finite(target_disutility)};
  };
  std::vector<std::optional<TenantProposal>> props{proposal(3.5), proposal(3.7)};
  CHECK(select_winner(props, P, g) == 0);
  props = {proposal(3.7), proposal(3.5)};
  CHECK(select_winner(props, P, g) == 1);
  props = {std::nullopt, proposal(3.9)};
  CHECK(select_winner(props, P, g) == 1);
  props = {proposal(3.5), proposal(3.5)};
  CHECK(select_winner(props, P, g) == 0);
  props = {std::nullopt, std::nullopt};
  CHECK(!select_winner(props, P, g).has_value());
}

TEST_CASE("select_winner rejects a selfish gain that raises the potential") {
  Eigen::MatrixXd cost(2, 1), weight(2, 1);
  cost << 0.5, 0.5;
  weight << 1.0, 100.0;
  Eigen::VectorXd budget(2);
  budget << 2.0, 2.0;
  const GameInstance g = tiny(cost, weight, budget);
  PricingProfile P(2, 1);
  P << 1.0, 1.0;  // mu = 0.5, q = (0.5, 0.5): potential 1 + 100
  Eigen::VectorXd row(1);
  row << 1.5;  // mu = 0.75, q = (0.75, 0.25): own 1/3, other 300
  PricingProfile trial = P;
  trial.row(0) = row.transpose();
  const auto q = all_device_responses(trial, g);
  CHECK(q(0, 0) == doctest::Approx(0.75));
  CHECK(hand_disutility(g, q, 0) < 1.0);
  CHECK(hand_disutility(g, q, 0) + hand_disutility(g, q, 1) == doctest::Approx(1.0 / 3.0 + 300.0));
  std::vector<std::optional<TenantProposal>> props{TenantProposal{row, BoundValue::finite(1.0 / 3.0)}, std::nullopt};
  CHECK(!select_winner(props, P, g).has_value());
}

TEST_CASE("single-tenant best response matches a budget-split grid") {
  Rng rng(37);
  for (int t = 0; t < 10; ++t) {
    Eigen::MatrixXd cost(1, 2), weight(1, 2);
    cost << rng.uniform(0.2, 1.0), rng.uniform(0.2, 1.0);
    weight << rng.uniform(0.5, 5.0), rng.uniform(0.5, 5.0);
    Eigen::VectorXd budget(1);
    budget << rng.uniform(0.3, 1.2);
    const GameInstance g = tiny(cost, weight, budget);
    PricingProfile P = Eigen::MatrixXd::Constant(1, 2, budget(0) / 2);
    const auto br = tenant_best_response(P, g, 0);
    const double got = br ? br->disutility.to_double() : potential(P, g).finite_part;
    double grid = INFINITY;
    for (int a = 1; a < 200; ++a) {
      for (int b = 1; a + b <= 200; ++b) {
        PricingProfile Q(1, 2);
        Q << budget(0) * a / 200.0, budget(0) * b / 200.0;
        grid = std::min(grid, potential(Q, g).finite_part);
      }
    }
    CHECK(got <= grid + 1e-12);
    CHECK(got == doctest::Approx(grid).epsilon(1e-4));
    if (br) CHECK(br->prices.sum() <= budget(0));
  }
}

TEST_CASE("symmetric devices get uniform prices") {
  Eigen::MatrixXd cost = Eigen::MatrixXd::Constant(1, 4, 0.5);
  Eigen::MatrixXd weight = Eigen::MatrixXd::Constant(1, 4, 2.0);
  Eigen::VectorXd budget(1);
  budget << 1.0;
  const GameInstance g = tiny(cost, weight, budget);
  PricingProfile P(1, 4);
  P << 0.4, 0.1, 0.3, 0.2;
  const auto br = tenant_best_response(P, g, 0);
  REQUIRE(br.has_value());
  for (int j = 0; j < 4; ++j) CHECK(std::abs(br->prices(j) - br->prices.mean()) <= 1e-4);
}

TEST_CASE("best response floors and infeasible budgets") {
  Eigen::MatrixXd cost = Eigen::MatrixXd::Constant(2, 3, 0.5);
  Eigen::MatrixXd weight = Eigen::MatrixXd::Constant(2, 3, 1.0);
  Eigen::VectorXd budget(2);
  budget << 1e-4, 1.0;
  GameInstance g = tiny(cost, weight, budget);
  g.q_floor = 0.01;
  PricingProfile P = Eigen::MatrixXd::Constant(2, 3, 1e-5);
  P.row(1).setConstant(0.3);
  const auto floors = price_floors(P, g, 0);
  CHECK(floors(0) == doctest::Approx(2 * 0.5 * 0.01));
  CHECK_ERROR_CODE(tenant_best_response(P, g, 0), ErrorCode::budget_infeasible);
  PricingProfile over = P;
  over.row(1).setConstant(1.0);
  CHECK_ERROR_CODE(tenant_best_response(over, g, 1), ErrorCode::budget_infeasible);
}

TEST_CASE("inducing price reaches the target participation") {
  const GameInstance g = testbed::make_game(3, 4, 38);
  PricingProfile P = Eigen::MatrixXd::Constant(3, 4, 0.4);
  for (double target : {0.05, 0.3, 0.6, 0.95}) {
    PricingProfile Q = P;
    Q(1, 2) = inducing_price(P, g, 1, 2, target);
    CHECK(all_device_responses(Q, g)(1, 2) == doctest::Approx(target).epsilon(1e-9));
  }
}

TEST_CASE("run_prince with one tenant reaches the grid optimum") {
  Eigen::MatrixXd cost(1, 2), weight(1, 2);
  cost << 0.3, 0.7;
  weight << 4.0, 1.0;
  Eigen::VectorXd budget(1);
  budget << 0.8;
  const GameInstance g = tiny(cost, weight, budget);
  const PrinceResult res = run_prince(g);
  double grid = INFINITY;
  for (int a = 1; a < 1000; ++a) {
    PricingProfile Q(1, 2);
    Q << 0.8 * a / 1000.0, 0.8 * (1000 - a) / 1000.0;
    grid = std::min(grid, potential(Q, g).finite_part);
  }
  CHECK(potential(res.P, g).finite_part <= grid + 1e-3);
  CHECK(verify_equilibrium(res.P, g, 200).passed);
  CHECK(!tenant_best_response(res.P, g, 0).has_value());
}

TEST_CASE("run_prince on a symmetric instance gives symmetric prices") {
  Eigen::MatrixXd cost = Eigen::MatrixXd::Constant(2, 2, 0.5);
  Eigen::MatrixXd weight = Eigen::MatrixXd::Constant(2, 2, 1.0);
  Eigen::VectorXd budget = Eigen::VectorXd::Constant(2, 1.5);
  const GameInstance g = tiny(cost, weight, budget);
  const PrinceResult res = run_prince(g);
  CHECK((res.P.row(0) - res.P.row(1)).cwiseAbs().maxCoeff() <= 1e-3);
}

TEST_CASE("run_prince trace descends and budgets hold") {
  for (std::uint64_t seed = 40; seed < 45; ++seed) {
    const GameInstance g = testbed::make_game(3, 12, seed);
    const PrinceResult res = run_prince(g);
    const auto& its = res.trace.iterations;
    CHECK(static_cast<int>(its.size()) == res.approved + 1);
    for (std::size_t k = 1; k < its.size(); ++k) {
      CHECK(its[k].potential.improves_on(its[k - 1].potential, 0.0));
      CHECK(its[k].winner >= 0);
    }
    for (int i = 0; i < 3; ++i) {
      CHECK(res.P.row(i).sum() <= g.budget(i));
      CHECK((res.P.row(i).array() >= 0.0).all());
    }
    const auto q = all_device_responses(res.P, g);
    CHECK((q - res.q).norm() == 0.0);
    for (int j = 0; j < 12; ++j) {
      const auto r = device_best_response(col(res.P.col(j)), col(g.cost.col(j)), g.tau(j));
      CHECK(kkt_residuals(col(res.P.col(j)), col(g.cost.col(j)), g.tau(j), r).max() < 1e-8);
    }
  }
}

TEST_CASE("run_prince is deterministic and honours the iteration cap") {
  const GameInstance g = testbed::make_game(3, 10, 46);
  const PrinceResult a = run_prince(g);
  PrinceOptions two_workers;
  two_workers.workers = 2;
  const PrinceResult b = run_prince(g, two_workers);
  CHECK(a.P == b.P);
  CHECK(a.approved == b.approved);
  REQUIRE(a.approved >= 1);
  PrinceOptions capped;
  capped.max_iterations = a.approved;
  CHECK_ERROR_CODE(run_prince(g, capped), ErrorCode::non_convergence);
}

TEST_CASE("tenant proposals improve the proposer") {
  const GameInstance g = testbed::make_game(3, 8, 47);
  PricingProfile P(3, 8);
  for (int i = 0; i < 3; ++i) P.row(i).setConstant(g.budget(i) / 8 * 0.999);
  const auto before = all_device_responses(P, g);
  for (int i = 0; i < 3; ++i) {
    const auto prop = tenant_proposal(P, g, i);
    if (!prop) continue;
    PricingProfile trial = P;
    trial.row(i) = prop->prices.transpose();
    const auto after = all_device_responses(trial, g);
    CHECK(tenant_disutility(i, after, g) < tenant_disutility(i, before, g));
    CHECK(prop->prices.sum() <= g.budget(i));
  }
}

TEST_CASE("equilibrium verification") {
  // Uniform prices on an asymmetric instance: moving budget toward the heavy device helps.
  Eigen::MatrixXd cost(1, 2), weight(1, 2);
  cost << 0.5, 0.5;
  weight << 10.0, 0.1;
  Eigen::VectorXd budget(1);
  budget << 0.6;
  const GameInstance g = tiny(cost, weight, budget);
  const PricingProfile uniform = Eigen::MatrixXd::Constant(1, 2, 0.3);
  CHECK(!verify_equilibrium(uniform, g, 200).passed);

  // Rich budget saturates participation: nothing can improve on zero.
  Eigen::VectorXd rich(1);
  rich << 10.0;
  const GameInstance r = tiny(cost, weight, rich);
  const PricingProfile saturating = Eigen::MatrixXd::Constant(1, 2, 5.0);
  CHECK(potential(saturating, r).finite_part == 0.0);
  CHECK(verify_equilibrium(saturating, r, 200).passed);
}

TEST_CASE("game validation") {
  GameInstance g = testbed::make_game(2, 3, 48);
  CHECK_NOTHROW(g.validate());
  g.tau(1) = 1.0;
  CHECK_ERROR_CODE(g.validate(), ErrorCode::invalid_scenario);
  g = testbed::make_game(2, 3, 48);
  g.budget(0) = 0.0;
  CHECK_ERROR_CODE(g.validate(), ErrorCode::invalid_scenario);
}

TEST_CASE("game trace CSV") {
  GameTrace t;
  t.iterations.push_back(GameIteration{0, -1, PotentialValue{0, 3.0}, {BoundValue::finite(1.0), BoundValue::finite(2.0)}});
  t.iterations.push_back(GameIteration{1, 1, PotentialValue{1, 1.0}, {BoundValue::finite(1.0), BoundValue::infinity()}});
  std::ostringstream os;
  write_game_trace_csv(os, t);
  CHECK(os.str() == "iter,winner,potential,lambda_1,lambda_2\n0,-1,3,1,2\n1,1,inf,1,inf\n");
}

TEST_CASE("fit_to_budget") {
  Eigen::VectorXd row = Eigen::VectorXd::Constant(7, 0.1);
  fit_to_budget(row, 0.7);
  CHECK(row.sum() <= 0.7);
  CHECK(row.sum() == doctest::Approx(0.7).epsilon(1e-13));
  Eigen::VectorXd small = Eigen::VectorXd::Constant(3, 0.1);
  fit_to_budget(small, 1.0);
  CHECK(small == Eigen::VectorXd::Constant(3, 0.1));
}
