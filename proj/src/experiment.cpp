// SPDX-License-Identifier: Apache-2.0
#include "sflgame/experiment.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <thread>

#include "sflgame/error.hpp"
#include "sflgame/rng.hpp"

namespace sflgame {

namespace {

using nlohmann::json;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr std::uint64_t kSimulationStream = 0x51;
constexpr std::uint64_t kVerifyStream = 0x7e;

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

json number_or_inf(const BoundValue& v) {
  if (v.is_infinite()) return "inf";
  return v.to_double();
}

json finite_or_null(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

std::string csv_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

/// A tenant's problem restricted to its first `count` devices, weights
/// renormalized over that subset.
struct SubProblem {
  std::vector<Workload> workloads;
  std::vector<double> a;
  std::vector<int> cuts;
  ModelState initial;
  std::optional<QuadraticStats> stats;
};

SubProblem sub_problem(const Scenario& s, int tenant, int count) {
  const auto& tw = s.workloads[static_cast<std::size_t>(tenant)];
  SubProblem sp;
  double total = 0.0;
  for (int j = 0; j < count; ++j) total += tw.bound.a[static_cast<std::size_t>(j)];
  require(total > 0.0, ErrorCode::invalid_scenario, "selected devices hold no data");
  for (int j = 0; j < count; ++j) {
    sp.workloads.push_back(tw.per_device[static_cast<std::size_t>(j)]);
    sp.a.push_back(tw.bound.a[static_cast<std::size_t>(j)] / total);
    sp.cuts.push_back(1);
  }
  sp.initial = tw.initial;
  if (s.config.workload == WorkloadKind::quadratic) {
    std::vector<QuadraticWorkload> quads;
    for (const auto& w : sp.workloads) quads.push_back(std::get<QuadraticWorkload>(w));
    const Eigen::Map<const Eigen::VectorXd> w0(sp.initial.params.data(),
                                               static_cast<Eigen::Index>(sp.initial.params.size()));
    sp.stats = exact_quadratic_stats(quads, sp.a, w0, s.tenants[static_cast<std::size_t>(tenant)].sync_interval,
                                     s.config.trust_radius);
    sp.stats->params.lr_rule = s.config.lr_rule;
  }
  return sp;
}

}  // namespace

GameInstance build_game(const Scenario& scenario, const std::vector<int>& cycles) {
  std::vector<BoundParams> bounds;
  for (const auto& w : scenario.workloads) bounds.push_back(w.bound);
  return make_game(bounds, cycles, scenario.tenants, scenario.devices, scenario.config.q_floor,
                   scenario.config.eps_improve, scenario.seed);
}

PolicyOutcome solve_policy(const Scenario& scenario, PolicyKind policy, int workers) {
  scenario.validate();
  PolicyOutcome out;
  out.policy = policy;
  for (const auto& t : scenario.tenants) {
    out.plans.push_back(policy == PolicyKind::fedpeft ? fedpeft_plan(t, scenario.devices)
                                                      : optimal_plan(t, scenario.devices));
    out.cycles.push_back(cycles_within_deadline(t, scenario.devices, out.plans.back()));
  }
  const GameInstance game = build_game(scenario, out.cycles);
  switch (policy) {
    case PolicyKind::prince:
    case PolicyKind::fedpeft: {
      PrinceOptions opts;
      opts.max_iterations = scenario.config.max_iterations;
      opts.multistart = scenario.config.multistart;
      opts.workers = workers;
      PrinceResult r = run_prince(game, opts);
      out.P = std::move(r.P);
      out.q = std::move(r.q);
      out.trace = std::move(r.trace);
      out.approved = r.approved;
      break;
    }
    case PolicyKind::fair:
    case PolicyKind::msda:
      out.P = baseline_prices(policy, scenario.tenants, scenario.devices);
      out.q = all_device_responses(out.P, game);
      break;
    case PolicyKind::full_participation:
      out.P = baseline_prices(PolicyKind::msda, scenario.tenants, scenario.devices);
      out.q = ParticipationProfile::Ones(game.tenants(), game.devices());
      break;
  }
  for (int i = 0; i < game.tenants(); ++i) out.disutility.push_back(tenant_disutility(i, out.q, game));
  out.total = potential_of_responses(out.q, game);
  return out;
}

std::vector<TenantSimulation> simulate_policy(const Scenario& scenario, const PolicyOutcome& outcome) {
  std::vector<TenantSimulation> result;
  const int n = static_cast<int>(scenario.devices.size());
  for (std::size_t i = 0; i < scenario.tenants.size(); ++i) {
    const auto& t = scenario.tenants[i];
    const auto& tw = scenario.workloads[i];
    SimulationSetup setup;
    setup.workloads = tw.per_device;
    setup.weights = tw.bound.a;
    setup.mode = outcome.plans[i].mode;
    setup.initial = tw.initial;
    const int layers = setup.initial.layer_count();
    for (int j = 0; j < n; ++j) {
      setup.cuts.push_back(workload_cut(t, outcome.plans[i].cuts[static_cast<std::size_t>(j)], layers));
    }
    const BoundParams bound = tw.bound;
    setup.learning_rate = [bound](int k) { return lr_schedule(bound, k); };
    setup.reference = tw.minimizer;
    setup.allow_absent = true;
    std::vector<double> q(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) q[static_cast<std::size_t>(j)] = std::clamp(outcome.q(static_cast<Eigen::Index>(i), j), 0.0, 1.0);

    TenantSimulation ts;
    const bool has_target = tw.minimizer.has_value();
    ts.F_star = has_target ? tw.bound.F_star : kNaN;
    ts.target = has_target ? scenario.config.target_factor * tw.bound.F_star : kNaN;
    const int cycles = outcome.cycles[i];
    const int reps = scenario.config.replicates;
    double loss_sum = 0.0;
    double cycles_sum = 0.0;
    for (int r = 0; r < reps; ++r) {
      const auto seed = derive_seed(scenario.seed, kSimulationStream, (i << 20) | static_cast<std::uint64_t>(r));
      SimulationResult sim = run_simulation(t, setup, q, cycles, seed);
      loss_sum += sim.trace.back().loss;
      int hit = cycles + 1;
      if (has_target) {
        for (const auto& row : sim.trace) {
          if (row.loss <= ts.target) {
            hit = row.cycle;
            break;
          }
        }
        if (hit <= cycles) ++ts.reached;
      }
      cycles_sum += hit;
      if (r == 0) ts.trace = std::move(sim.trace);
    }
    ts.final_loss = loss_sum / reps;
    ts.cycles_to_target = has_target ? cycles_sum / reps : kNaN;
    result.push_back(std::move(ts));
  }
  return result;
}

MetricsReport cmd_solve(const Scenario& scenario, int workers) {
  MetricsReport r;
  r.command = "solve";
  r.outcome = solve_policy(scenario, scenario.config.policy, workers);
  r.seed = scenario.seed;
  r.scenario_hash = scenario_hash(scenario);
  return r;
}

MetricsReport cmd_simulate(const Scenario& scenario, int workers) {
  MetricsReport r = cmd_solve(scenario, workers);
  r.command = "simulate";
  r.simulation = simulate_policy(scenario, r.outcome);
  return r;
}

bool VerifySummary::passed() const {
  for (const auto& c : checks) {
    if (c.gating && !c.passed) return false;
  }
  return true;
}

VerifySummary cmd_verify(const Scenario& scenario, int workers) {
  VerifySummary summary;
  const PolicyOutcome out = solve_policy(scenario, PolicyKind::prince, workers);
  const GameInstance game = build_game(scenario, out.cycles);
  auto add = [&](std::string name, bool ok, std::string detail, bool gating = true) {
    summary.checks.push_back(VerifyCheck{std::move(name), ok, gating, std::move(detail)});
  };

  {
    bool ok = true;
    for (int i = 0; i < game.tenants(); ++i) ok = ok && out.P.row(i).sum() <= game.budget(i) && out.P.row(i).minCoeff() >= 0.0;
    add("budget_feasibility", ok, "sum of prices within budget for every tenant");
  }
  {
    bool ok = out.trace.has_value();
    if (ok) {
      const auto& its = out.trace->iterations;
      for (std::size_t k = 1; k < its.size(); ++k) ok = ok && its[k].potential.improves_on(its[k - 1].potential, 0.0);
    }
    add("potential_descent", ok, std::to_string(out.approved) + " approved updates, potential strictly decreasing");
  }
  {
    double worst = 0.0;
    for (int j = 0; j < game.devices(); ++j) {
      const Eigen::VectorXd p = out.P.col(j);
      const Eigen::VectorXd c = game.cost.col(j);
      const std::span<const double> ps(p.data(), static_cast<std::size_t>(p.size()));
      const std::span<const double> cs(c.data(), static_cast<std::size_t>(c.size()));
      worst = std::max(worst, kkt_residuals(ps, cs, game.tau(j), device_best_response(ps, cs, game.tau(j))).max());
    }
    add("kkt_residuals", worst < scenario.config.tolerances.kkt, "max residual " + csv_number(worst));
  }

  const int count = std::min<int>(4, static_cast<int>(scenario.devices.size()));
  SubProblem sp = sub_problem(scenario, 0, count);
  const TenantSpec& tenant = scenario.tenants.front();
  std::vector<double> q(static_cast<std::size_t>(count));
  for (int j = 0; j < count; ++j) q[static_cast<std::size_t>(j)] = std::clamp(out.q(0, j), scenario.config.q_floor, 1.0);
  {
    // Exact expectation of the aggregate over every participation subset.
    const double gamma = sp.stats ? lr_schedule(sp.stats->params, 1) : 0.05;
    std::vector<ModelState> local;
    for (int j = 0; j < count; ++j) {
      ModelState dev = sp.initial;
      ModelState srv = sp.initial;
      SplitChannels ch;
      for (int r = 0; r < tenant.sync_interval; ++r) run_split_round(dev, srv, sp.workloads[static_cast<std::size_t>(j)], gamma, ch);
      local.push_back(assemble_device_model(split_model(dev).first, split_model(srv).second));
    }
    const ModelState full = aggregate_full(local, sp.a);
    std::vector<double> expected(full.params.size(), 0.0);
    for (unsigned mask = 0; mask < (1u << count); ++mask) {
      double prob = 1.0;
      std::map<int, ModelState> updates;
      for (int j = 0; j < count; ++j) {
        const bool in = mask & (1u << j);
        prob *= in ? q[static_cast<std::size_t>(j)] : 1.0 - q[static_cast<std::size_t>(j)];
        if (in) updates.emplace(j, local[static_cast<std::size_t>(j)]);
      }
      const ModelState agg = aggregate_bias_resilient(sp.initial, updates, q, sp.a);
      for (std::size_t k = 0; k < expected.size(); ++k) expected[k] += prob * agg.params[k];
    }
    double err = 0.0;
    for (std::size_t k = 0; k < expected.size(); ++k) err = std::max(err, std::abs(expected[k] - full.params[k]));
    add("unbiasedness", err <= scenario.config.tolerances.unbiased, "max deviation " + csv_number(err));
  }
  if (sp.stats) {
    constexpr int kCycles = 10;
    constexpr int kSeeds = 100;
    SimulationSetup setup;
    setup.workloads = sp.workloads;
    setup.weights = sp.a;
    setup.cuts = sp.cuts;
    setup.initial = sp.initial;
    const BoundParams bp = sp.stats->params;
    setup.learning_rate = [bp](int k) { return lr_schedule(bp, k); };
    double gap = 0.0;
    for (int s = 0; s < kSeeds; ++s) {
      const auto sim = run_simulation(tenant, setup, q, kCycles, derive_seed(scenario.seed, kVerifyStream, static_cast<std::uint64_t>(s)));
      gap += sim.trace.back().loss - bp.F_star;
    }
    gap /= kSeeds;
    const BoundValue bound = optimality_gap_bound(bp, q, kCycles);
    add("bound_validity", BoundValue::finite(std::max(gap, 0.0)) <= bound,
        "mean gap " + csv_number(gap) + " vs bound " + bound.to_string());
  }
  {
    const auto rep = verify_equilibrium(out.P, game, 200);
    add("unilateral_deviation_probe", rep.passed,
        rep.passed ? "no profitable unilateral deviation found"
                   : "some tenant can lower its own disutility; the potential-approved fixed point need not be a Nash point",
        false);
  }
  return summary;
}

std::vector<SweepRow> cmd_sweep(const ScenarioConfig& base, const SweepGrid& grid, std::uint64_t seed, int workers) {
  struct Cell {
    int m;
    int n;
    PolicyKind policy;
  };
  std::vector<Cell> cells;
  for (int m : grid.tenants) {
    for (int n : grid.devices) {
      for (auto p : grid.policies) cells.push_back({m, n, p});
    }
  }
  std::vector<SweepRow> rows(cells.size());
  std::vector<std::exception_ptr> errors(cells.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t k = next++; k < cells.size(); k = next++) {
      try {
        ScenarioConfig cfg = base;
        cfg.device_count = cells[k].n;
        cfg.tenant_count = cells[k].m;
        cfg.policy = cells[k].policy;
        if (!base.tenants.empty()) {
          cfg.tenants.clear();
          for (int i = 0; i < cells[k].m; ++i) cfg.tenants.push_back(base.tenants[static_cast<std::size_t>(i) % base.tenants.size()]);
        }
        const Scenario s = generate_scenario(cfg, seed);
        const PolicyOutcome o = solve_policy(s, cells[k].policy, 1);
        SweepRow& row = rows[k];
        row.tenants = cells[k].m;
        row.devices = cells[k].n;
        row.policy = cells[k].policy;
        row.total_disutility = o.total.value().to_double();
        row.infinite_tenants = o.total.infinite_terms;
        row.approved = o.approved;
        double kk = 0.0;
        for (int c : o.cycles) kk += c;
        row.mean_cycles = kk / static_cast<double>(o.cycles.size());
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  const int nthreads = std::max(1, std::min<int>(workers, static_cast<int>(cells.size())));
  std::vector<std::thread> pool;
  for (int w = 1; w < nthreads; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return rows;
}

json report_json(const MetricsReport& r, const Scenario& s) {
  const auto& o = r.outcome;
  json tenants = json::array();
  for (std::size_t i = 0; i < s.tenants.size(); ++i) {
    const auto& t = s.tenants[i];
    json row{{"id", t.id},
             {"name", t.name},
             {"cycles", o.cycles[i]},
             {"split_mode", o.plans[i].mode == SplitMode::split ? "split" : "no_split"},
             {"disutility", number_or_inf(o.disutility[i])},
             {"budget", t.budget},
             {"spent", o.P.row(static_cast<Eigen::Index>(i)).sum()}};
    if (!r.simulation.empty()) {
      const auto& sim = r.simulation[i];
      row["F_star"] = finite_or_null(sim.F_star);
      row["final_loss"] = finite_or_null(sim.final_loss);
      row["cycles_to_target"] = finite_or_null(sim.cycles_to_target);
      row["replicates_reaching_target"] = sim.reached;
    }
    tenants.push_back(row);
  }
  json potential = json::array();
  if (o.trace) {
    for (const auto& it : o.trace->iterations) potential.push_back(number_or_inf(it.potential.value()));
  }
  json devices = json::array();
  for (std::size_t j = 0; j < s.devices.size(); ++j) {
    const auto ju = static_cast<Eigen::Index>(j);
    const Eigen::VectorXd p = o.P.col(ju);
    const Eigen::VectorXd q = o.q.col(ju);
    const std::vector<double> qv(q.data(), q.data() + q.size());
    const auto& d = s.devices[j];
    devices.push_back({{"id", d.id},
                       {"utility", device_utility({p.data(), static_cast<std::size_t>(p.size())}, d.cost_coeff,
                                                  d.cost_exponent, qv)},
                       {"q", qv}});
  }
  return json{{"command", r.command},
              {"policy", std::string(to_string(o.policy))},
              {"seed", r.seed},
              {"scenario_hash", hex64(r.scenario_hash)},
              {"total_disutility", number_or_inf(o.total.value())},
              {"tenants", tenants},
              {"game", {{"approved_updates", o.approved}, {"potential", potential}}},
              {"devices", devices}};
}

void write_tenant_csv(std::ostream& out, const MetricsReport& r, const Scenario& s) {
  const auto& o = r.outcome;
  out << "tenant,name,cycles,disutility,budget,spent,F_star,final_loss,cycles_to_target,replicates_reaching_target\n";
  for (std::size_t i = 0; i < s.tenants.size(); ++i) {
    const auto& t = s.tenants[i];
    out << t.id << ',' << t.name << ',' << o.cycles[i] << ',' << o.disutility[i].to_string() << ','
        << csv_number(t.budget) << ',' << csv_number(o.P.row(static_cast<Eigen::Index>(i)).sum());
    if (r.simulation.empty()) {
      out << ",nan,nan,nan,0\n";
    } else {
      const auto& sim = r.simulation[i];
      out << ',' << csv_number(sim.F_star) << ',' << csv_number(sim.final_loss) << ','
          << csv_number(sim.cycles_to_target) << ',' << sim.reached << '\n';
    }
  }
}

void write_device_csv(std::ostream& out, const MetricsReport& r, const Scenario& s) {
  const auto& o = r.outcome;
  out << "device,tenant,price,q,device_utility\n";
  for (std::size_t j = 0; j < s.devices.size(); ++j) {
    const auto ju = static_cast<Eigen::Index>(j);
    const Eigen::VectorXd p = o.P.col(ju);
    const Eigen::VectorXd q = o.q.col(ju);
    const auto& d = s.devices[j];
    const double u = device_utility({p.data(), static_cast<std::size_t>(p.size())}, d.cost_coeff, d.cost_exponent,
                                    {q.data(), static_cast<std::size_t>(q.size())});
    for (std::size_t i = 0; i < s.tenants.size(); ++i) {
      const auto iu = static_cast<Eigen::Index>(i);
      out << d.id << ',' << i << ',' << csv_number(p(iu)) << ',' << csv_number(q(iu)) << ',' << csv_number(u) << '\n';
    }
  }
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << "tenants,devices,policy,total_disutility,infinite_tenants,approved_updates,mean_cycles\n";
  for (const auto& r : rows) {
    out << r.tenants << ',' << r.devices << ',' << to_string(r.policy) << ',' << csv_number(r.total_disutility) << ','
        << r.infinite_tenants << ',' << r.approved << ',' << csv_number(r.mean_cycles) << '\n';
  }
}

json verify_json(const VerifySummary& summary) {
  json checks = json::array();
  for (const auto& c : summary.checks) {
    checks.push_back({{"name", c.name}, {"passed", c.passed}, {"gating", c.gating}, {"detail", c.detail}});
  }
  return json{{"passed", summary.passed()}, {"checks", checks}};
}

json manifest_json(const ScenarioConfig& config, std::uint64_t seed, const std::string& command,
                   const std::vector<std::string>& files) {
  return json{{"tool", "sflgame"},
              {"version", kVersion},
              {"command", command},
              {"seed", seed},
              {"config_hash", hex64(fnv1a64(to_json(config).dump()))},
              {"files", files}};
}

}  // namespace sflgame
