// SPDX-License-Identifier: Apache-2.0
// Acceptance checks. Each criterion prints one PASS/FAIL line; the exit code
// is nonzero when any selected criterion fails.

#include <CLI11.hpp>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>

#include "sflgame/experiment.hpp"
#include "support/testbed.hpp"

using namespace sflgame;

namespace {

// Pinned tolerances and sizes.
constexpr double kUnbiasedTol = 1e-12;
constexpr int kUnbiasedTrials = 200;
constexpr int kVarianceDraws = 5000;
constexpr int kVarianceConfigs = 20;
constexpr int kBoundSeeds = 100;
constexpr int kKktInstances = 1000;
constexpr double kKktResidualTol = 1e-8;
constexpr double kKktUtilityTol = 1e-6;
constexpr int kKktGridSteps = 100;  // 101 points per axis
constexpr int kDescentScenarios = 50;
constexpr double kMeanIterationsLo = 10.0;
constexpr double kMeanIterationsHi = 200.0;
constexpr int kGridInstances = 100;
constexpr int kGridPoints = 21;
constexpr double kGridMatchTol = 1e-9;
constexpr int kBenchmarkScenarios = 20;
constexpr double kStrictShare = 0.9;
constexpr double kCyclesShare = 0.9;
constexpr double kSplitTol = 1e-10;
constexpr int kFig3Seeds = 200;
constexpr int kFig3Cycles = 200;
constexpr double kFig3StandardErrors = 3.0;

struct Outcome {
  bool passed = false;
  std::string detail;
};

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

/// Local updates for every device from `prev`, I split rounds each.
std::vector<ModelState> local_updates(const testbed::Quadratic& tb, const ModelState& prev, double gamma) {
  std::vector<ModelState> out;
  SplitChannels ch;
  for (const auto& w : tb.workloads) {
    ModelState dev = prev;
    ModelState srv = prev;
    for (int r = 0; r < tb.tenant.sync_interval; ++r) run_split_round(dev, srv, w, gamma, ch);
    out.push_back(assemble_device_model(split_model(dev).first, split_model(srv).second));
  }
  return out;
}

Outcome ac1_unbiasedness() {
  double worst = 0.0;
  for (int t = 0; t < kUnbiasedTrials; ++t) {
    const auto tb = testbed::make_quadratic(4, 3, 2, 1000 + t);
    Rng rng(derive_seed(77, t));
    std::vector<double> q(4);
    for (auto& v : q) v = rng.uniform(0.05, 1.0);
    const auto updates = local_updates(tb, tb.initial, lr_schedule(tb.stats.params, 1));
    std::vector<double> expect(tb.initial.params.size(), 0.0);
    for (int mask = 0; mask < 16; ++mask) {
      double prob = 1.0;
      std::map<int, ModelState> chosen;
      for (int j = 0; j < 4; ++j) {
        const bool in = (mask >> j) & 1;
        prob *= in ? q[j] : 1.0 - q[j];
        if (in) chosen.emplace(j, updates[j]);
      }
      const ModelState agg = aggregate_bias_resilient(tb.initial, chosen, q, tb.a);
      for (std::size_t k = 0; k < expect.size(); ++k) expect[k] += prob * agg.params[k];
    }
    const ModelState full = aggregate_full(updates, tb.a);
    for (std::size_t k = 0; k < expect.size(); ++k) worst = std::max(worst, std::abs(expect[k] - full.params[k]));
  }
  return {worst <= kUnbiasedTol, "max componentwise deviation " + fmt(worst) + " over " +
                                     std::to_string(kUnbiasedTrials) + " instances (tol " + fmt(kUnbiasedTol) + ")"};
}

Outcome ac2_variance() {
  int violations = 0;
  double worst_ratio = 0.0;
  for (int c = 0; c < kVarianceConfigs; ++c) {
    auto tb = testbed::make_quadratic(6, 3, 2, 2000 + c);
    tb.stats.params.steps_per_sample = 1.0;
    Rng rng(derive_seed(88, c));
    std::vector<double> q(6);
    for (auto& v : q) v = rng.uniform(0.1, 1.0);
    const double gamma = lr_schedule(tb.stats.params, 1);
    const auto updates = local_updates(tb, tb.initial, gamma);
    const ModelState mean = aggregate_full(updates, tb.a);
    double acc = 0.0;
    for (int d = 0; d < kVarianceDraws; ++d) {
      std::map<int, ModelState> chosen;
      for (int j : draw_participation(q, rng)) chosen.emplace(j, updates[j]);
      const ModelState agg = aggregate_bias_resilient(tb.initial, chosen, q, tb.a);
      for (std::size_t k = 0; k < agg.params.size(); ++k) {
        const double e = agg.params[k] - mean.params[k];
        acc += e * e;
      }
    }
    const double empirical = acc / kVarianceDraws;
    const double bound = aggregation_variance_bound(tb.stats.params, gamma, q).to_double();
    worst_ratio = std::max(worst_ratio, empirical / bound);
    if (empirical > bound) ++violations;
  }
  return {violations == 0, std::to_string(violations) + " violations over " + std::to_string(kVarianceConfigs) +
                               " configurations x " + std::to_string(kVarianceDraws) +
                               " draws; largest empirical/bound " + fmt(worst_ratio)};
}

Outcome ac3_bound_validity() {
  const auto tb = testbed::make_quadratic(4, 2, 2, 3000);
  SimulationSetup setup = testbed::setup_for(tb);
  const std::vector<int> ks{10, 50, 200};
  const double levels[] = {0.25, 0.5, 0.75, 1.0};
  int failures = 0;
  double worst_ratio = 0.0;
  int points = 0;
  for (int code = 0; code < 256; ++code) {
    std::vector<double> q(4);
    for (int j = 0; j < 4; ++j) q[j] = levels[(code >> (2 * j)) & 3];
    std::vector<double> gap_sum(ks.size(), 0.0);
    for (int s = 0; s < kBoundSeeds; ++s) {
      const auto sim = run_simulation(tb.tenant, setup, q, ks.back(), derive_seed(3000, code, s));
      for (std::size_t t = 0; t < ks.size(); ++t) {
        gap_sum[t] += sim.trace[static_cast<std::size_t>(ks[t] - 1)].loss - tb.stats.params.F_star;
      }
    }
    for (std::size_t t = 0; t < ks.size(); ++t) {
      const double mean_gap = gap_sum[t] / kBoundSeeds;
      const double bound = optimality_gap_bound(tb.stats.params, q, ks[t]).to_double();
      worst_ratio = std::max(worst_ratio, mean_gap / bound);
      ++points;
      if (mean_gap > bound) ++failures;
    }
  }
  return {failures == 0, std::to_string(failures) + " of " + std::to_string(points) +
                             " (q, K) points exceed the bound; largest mean-gap/bound " + fmt(worst_ratio)};
}

/// Best utility over q on a uniform grid with sum(q) <= 1.
double grid_best(const std::vector<std::vector<double>>& table, std::size_t axis, int remaining) {
  if (axis == table.size()) return 0.0;
  double best = -std::numeric_limits<double>::infinity();
  for (int k = 0; k <= remaining; ++k) {
    best = std::max(best, table[axis][static_cast<std::size_t>(k)] + grid_best(table, axis + 1, remaining - k));
  }
  return best;
}

Outcome ac4_kkt() {
  Rng rng(4000);
  const double taus[] = {1.0, 1.5, 2.0, 3.0};
  double worst_residual = 0.0;
  double worst_gap = -std::numeric_limits<double>::infinity();
  int failures = 0;
  for (int t = 0; t < kKktInstances; ++t) {
    const int m = 1 + static_cast<int>(rng.below(4));
    const double tau = taus[rng.below(4)];
    std::vector<double> prices(static_cast<std::size_t>(m)), costs(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) {
      costs[static_cast<std::size_t>(i)] = rng.uniform(0.1, 2.0);
      prices[static_cast<std::size_t>(i)] = rng.uniform(0.0, 3.0);
    }
    const DeviceResponse r = device_best_response(prices, costs, tau);
    const std::vector<double> q(r.q.data(), r.q.data() + m);
    const double u = device_utility(prices, costs, tau, q);
    std::vector<std::vector<double>> table(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) {
      for (int k = 0; k <= kKktGridSteps; ++k) {
        const double x = static_cast<double>(k) / kKktGridSteps;
        table[static_cast<std::size_t>(i)].push_back(prices[static_cast<std::size_t>(i)] * x -
                                                     costs[static_cast<std::size_t>(i)] * std::pow(x, tau));
      }
    }
    const double grid = grid_best(table, 0, kKktGridSteps);
    const double residual = kkt_residuals(prices, costs, tau, r).max();
    worst_residual = std::max(worst_residual, residual);
    worst_gap = std::max(worst_gap, grid - u);
    if (residual >= kKktResidualTol || grid - u > kKktUtilityTol) ++failures;
  }
  return {failures == 0, std::to_string(failures) + " failing instances of " + std::to_string(kKktInstances) +
                             "; max residual " + fmt(worst_residual) + ", max grid advantage " + fmt(worst_gap)};
}

Outcome ac5_descent() {
  long total_iterations = 0;
  int broken = 0;
  for (int s = 1; s <= kDescentScenarios; ++s) {
    ScenarioConfig cfg;
    cfg.tenant_count = 2 + s % 3;
    cfg.device_count = 20 + (s * 37) % 81;
    const Scenario sc = generate_scenario(cfg, static_cast<std::uint64_t>(s));
    const PolicyOutcome out = solve_policy(sc, PolicyKind::prince);
    const auto& its = out.trace->iterations;
    for (std::size_t k = 1; k < its.size(); ++k) {
      if (!its[k].potential.improves_on(its[k - 1].potential, 0.0)) ++broken;
    }
    total_iterations += out.approved + 1;
  }
  const double mean = static_cast<double>(total_iterations) / kDescentScenarios;
  const bool ok = broken == 0 && mean >= kMeanIterationsLo && mean <= kMeanIterationsHi;
  return {ok, std::to_string(kDescentScenarios) + " scenarios terminated; " + std::to_string(broken) +
                  " non-decreasing steps; mean iterations " + fmt(mean) + " (required [" + fmt(kMeanIterationsLo) +
                  ", " + fmt(kMeanIterationsHi) + "])"};
}

Outcome ac6_grid_optimality() {
  int mismatches = 0;
  double worst = 0.0;
  for (int t = 0; t < kGridInstances; ++t) {
    const GameInstance g = testbed::make_game(2, 2, 6000 + t);
    StrategySpace space;
    space.rows.resize(2);
    for (int i = 0; i < 2; ++i) {
      for (int k = 0; k < kGridPoints; ++k) {
        const double share = static_cast<double>(k) / (kGridPoints - 1);
        Eigen::VectorXd row(2);
        row << g.budget(i) * share, g.budget(i) * (1.0 - share);
        fit_to_budget(row, g.budget(i));
        space.rows[static_cast<std::size_t>(i)].push_back(row);
      }
    }
    PricingProfile start(2, 2);
    for (int i = 0; i < 2; ++i) start.row(i) = space.rows[static_cast<std::size_t>(i)][kGridPoints / 2].transpose();
    PricingProfile P(2, 2);
    std::optional<PotentialValue> best;
    for (const auto& r0 : space.rows[0]) {
      for (const auto& r1 : space.rows[1]) {
        P.row(0) = r0.transpose();
        P.row(1) = r1.transpose();
        const PotentialValue v = potential(P, g);
        if (!best || v.improves_on(*best, 0.0)) best = v;
      }
    }
    PrinceOptions opts;
    opts.space = space;
    opts.start = start;
    const PrinceResult res = run_prince(g, opts);
    const PotentialValue got = potential(res.P, g);
    const double diff = got.infinite_terms == best->infinite_terms
                            ? got.finite_part - best->finite_part
                            : std::numeric_limits<double>::infinity();
    worst = std::max(worst, diff);
    if (diff > kGridMatchTol * std::max(1.0, std::abs(best->finite_part))) ++mismatches;
  }
  return {mismatches == 0, std::to_string(mismatches) + " of " + std::to_string(kGridInstances) +
                               " instances end above the exhaustive-grid minimum; largest excess " + fmt(worst)};
}

Outcome ac7_benchmarks() {
  int weak = 0;
  int strict = 0;
  int cycles_ok = 0;
  for (int s = 1; s <= kBenchmarkScenarios; ++s) {
    const Scenario sc = generate_scenario(ScenarioConfig{}, static_cast<std::uint64_t>(s));
    const PolicyOutcome prince = solve_policy(sc, PolicyKind::prince);
    const PolicyOutcome fair = solve_policy(sc, PolicyKind::fair);
    const PolicyOutcome msda = solve_policy(sc, PolicyKind::msda);
    const bool le = !fair.total.improves_on(prince.total, 0.0) && !msda.total.improves_on(prince.total, 0.0);
    const bool lt = prince.total.improves_on(fair.total, 0.0) && prince.total.improves_on(msda.total, 0.0);
    weak += le;
    strict += lt;
    double c_prince = 0.0;
    double c_msda = 0.0;
    for (const auto& t : simulate_policy(sc, prince)) c_prince += t.cycles_to_target;
    for (const auto& t : simulate_policy(sc, msda)) c_msda += t.cycles_to_target;
    cycles_ok += c_prince <= c_msda;
  }
  const int n = kBenchmarkScenarios;
  const bool ok = weak == n && strict >= kStrictShare * n && cycles_ok >= kCyclesShare * n;
  return {ok, "potential <= FAIR and MSDA in " + std::to_string(weak) + "/" + std::to_string(n) +
                  ", strictly lower in " + std::to_string(strict) + "/" + std::to_string(n) +
                  "; cycles-to-target <= MSDA in " + std::to_string(cycles_ok) + "/" + std::to_string(n)};
}

Outcome ac8_split_equivalence() {
  const std::vector<std::vector<int>> shapes{{3, 6, 5, 2}, {4, 8, 8, 6, 3}, {2, 5, 5, 5, 5, 1}};
  double worst = 0.0;
  int checks = 0;
  for (std::size_t sh = 0; sh < shapes.size(); ++sh) {
    for (int seed = 0; seed < 10; ++seed) {
      const auto m = testbed::make_mlp(shapes[sh], 12, 8000 + 100 * sh + seed);
      const double gamma = 0.1;
      const auto ref = reference::sgd_step(m.ref, m.params, gamma);
      double ref_norm = 0.0;
      for (double v : ref) ref_norm += v * v;
      const int layers = static_cast<int>(shapes[sh].size()) - 1;
      for (int cut = 1; cut <= layers; ++cut) {
        ModelState dev;
        dev.params = m.params;
        dev.layer_offsets = mlp_offsets(shapes[sh]);
        dev.cut = cut;
        ModelState srv = dev;
        SplitChannels ch;
        run_split_round(dev, srv, Workload{m.workload}, gamma, ch);
        const ModelState out = cut == layers ? dev : assemble_device_model(split_model(dev).first, split_model(srv).second);
        double err = 0.0;
        for (std::size_t k = 0; k < ref.size(); ++k) err += (out.params[k] - ref[k]) * (out.params[k] - ref[k]);
        worst = std::max(worst, std::sqrt(err / ref_norm));
        ++checks;
      }
    }
  }
  return {worst <= kSplitTol, std::to_string(checks) + " (network, cut) pairs; max relative error " + fmt(worst)};
}

Outcome ac9_partial_participation() {
  const auto tb = testbed::make_quadratic(10, 4, 2, 9000);
  const SimulationSetup setup = testbed::setup_for(tb);
  const std::vector<double> ones(10, 1.0);
  const SimulationResult full_run = run_simulation(tb.tenant, setup, ones, kFig3Cycles, 1);
  const double full = full_run.trace.back().loss;
  const Eigen::Map<const Eigen::VectorXd> w_full(full_run.final_model.params.data(),
                                                 static_cast<Eigen::Index>(full_run.final_model.params.size()));
  Eigen::VectorXd h_mean = Eigen::VectorXd::Zero(w_full.size());
  for (std::size_t j = 0; j < tb.quads.size(); ++j) h_mean += tb.a[j] * tb.quads[j].curvature;
  bool ok = true;
  std::string detail = "q=1 final loss " + fmt(full);
  for (double level : {0.25, 0.5, 0.75}) {
    const std::vector<double> q(10, level);
    double sum = 0.0;
    double sum_sq = 0.0;
    double offset = 0.0;  // mean of 0.5 (w - w_full)' H (w - w_full)
    Eigen::VectorXd w_sum = Eigen::VectorXd::Zero(w_full.size());
    Eigen::VectorXd w_sq = Eigen::VectorXd::Zero(w_full.size());
    for (int s = 0; s < kFig3Seeds; ++s) {
      const SimulationResult run = run_simulation(tb.tenant, setup, q, kFig3Cycles, derive_seed(9000, s));
      const double loss = run.trace.back().loss;
      sum += loss;
      sum_sq += loss * loss;
      const Eigen::Map<const Eigen::VectorXd> w(run.final_model.params.data(), w_full.size());
      const Eigen::VectorXd d = w - w_full;
      offset += 0.5 * d.cwiseProduct(d).dot(h_mean);
      w_sum += w;
      w_sq += w.cwiseProduct(w);
    }
    const double n = kFig3Seeds;
    const double mean = sum / n;
    const double se = std::sqrt(std::max(0.0, (sum_sq - n * mean * mean) / (n - 1)) / n);
    const double z = se > 0.0 ? std::abs(mean - full) / se : (mean == full ? 0.0 : INFINITY);
    const Eigen::VectorXd w_mean = w_sum / n;
    const Eigen::VectorXd w_se = ((w_sq - n * w_mean.cwiseProduct(w_mean)) / (n - 1) / n).cwiseMax(0.0).cwiseSqrt();
    const double model_z = ((w_mean - w_full).cwiseAbs().array() / w_se.array()).maxCoeff();
    ok = ok && z <= kFig3StandardErrors;
    detail += "; q=" + fmt(level) + ": mean " + fmt(mean) + ", " + fmt(z) + " SE away (curvature offset " +
              fmt(offset / n) + ", mean-model max " + fmt(model_z) + " SE)";
  }
  return {ok, detail};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  int criterion = 0;
  app.add_option("--criterion", criterion, "Criterion number 1-9; 0 runs all")->check(CLI::Range(0, 9));
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> all{
      {"unbiased aggregation", ac1_unbiasedness},
      {"variance bound", ac2_variance},
      {"bound validity", ac3_bound_validity},
      {"device KKT response", ac4_kkt},
      {"potential descent and termination", ac5_descent},
      {"grid optimality of the fixed point", ac6_grid_optimality},
      {"benchmark comparison", ac7_benchmarks},
      {"split equals monolithic", ac8_split_equivalence},
      {"partial vs full participation", ac9_partial_participation},
  };
  bool passed = true;
  for (std::size_t k = 0; k < all.size(); ++k) {
    if (criterion != 0 && criterion != static_cast<int>(k) + 1) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = all[k].second();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cout << "AC" << k + 1 << ' ' << (o.passed ? "PASS" : "FAIL") << ' ' << all[k].first << ": " << o.detail
              << " [" << fmt(secs) << " s]" << std::endl;
    passed = passed && o.passed;
  }
  return passed ? 0 : 1;
}
