// SPDX-License-Identifier: Apache-2.0
#include "sflgame/sfl_engine.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "sflgame/error.hpp"

namespace sflgame {

namespace {

Tensor from_matrix(const RowMatrix& m) {
  Tensor t{static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols()), {}};
  t.data.assign(m.data(), m.data() + m.size());
  return t;
}

RowMatrix to_matrix(const Tensor& t) {
  return Eigen::Map<const RowMatrix>(t.data.data(), static_cast<Eigen::Index>(t.rows),
                                     static_cast<Eigen::Index>(t.cols));
}

void check_finite(std::span<const double> v, const char* what) {
  for (double x : v) {
    require(std::isfinite(x), ErrorCode::numerical_divergence, std::string(what) + " became non-finite");
  }
}

void check_layout(const ModelState& state, const Workload& workload) {
  require(state.params.size() == parameter_count(workload), ErrorCode::shape,
          "model has " + std::to_string(state.params.size()) + " parameters, workload expects " +
              std::to_string(parameter_count(workload)));
  state.validate(state.cut == state.layer_count() ? SplitMode::no_split : SplitMode::split);
}

void check_probability_row(std::span<const double> q) {
  for (double x : q) {
    require(x >= 0.0 && x <= 1.0, ErrorCode::invalid_argument, "participation level outside [0, 1]");
  }
}

}  // namespace

std::vector<int> draw_participation(std::span<const double> q, Rng& rng) {
  check_probability_row(q);
  std::vector<int> out;
  for (std::size_t j = 0; j < q.size(); ++j) {
    if (rng.uniform() < q[j]) out.push_back(static_cast<int>(j));
  }
  return out;
}

std::vector<int> draw_participation(std::span<const double> q, std::uint64_t seed) {
  Rng rng(seed);
  return draw_participation(q, rng);
}

Tensor device_forward(const ModelState& state, const Workload& workload) {
  check_layout(state, workload);
  if (const auto* m = std::get_if<MlpWorkload>(&workload)) {
    const auto outs = mlp::forward(*m, state.device_params(), 0, state.cut, m->inputs);
    return from_matrix(outs.back());
  }
  const auto dev = state.device_params();
  return Tensor{1, dev.size(), {dev.begin(), dev.end()}};
}

Tensor batch_labels(const Workload& workload) {
  if (const auto* m = std::get_if<MlpWorkload>(&workload)) return from_matrix(m->labels);
  return {};
}

ServerStepResult server_step(ModelState& state, const Workload& workload, const Tensor& activations,
                             const Tensor& labels, double gamma) {
  check_layout(state, workload);
  ServerStepResult result;
  if (const auto* m = std::get_if<MlpWorkload>(&workload)) {
    const int h = state.layer_count();
    require(activations.rows == static_cast<std::size_t>(m->inputs.rows()) &&
                activations.cols == static_cast<std::size_t>(m->dims[static_cast<std::size_t>(state.cut)]),
            ErrorCode::shape, "activation shape does not match the cut layer");
    require(labels.rows == activations.rows && labels.cols == static_cast<std::size_t>(m->dims.back()),
            ErrorCode::shape, "label shape does not match the output layer");
    const RowMatrix x = to_matrix(activations);
    const RowMatrix y = to_matrix(labels);
    auto server = state.server_params();
    const auto outs = mlp::forward(*m, server, state.cut, h, x);
    const RowMatrix err = outs.back() - y;
    const double n = static_cast<double>(x.rows());
    result.loss = 0.5 * err.squaredNorm() / n;
    require(std::isfinite(result.loss), ErrorCode::numerical_divergence, "server loss is not finite");
    std::vector<double> grad(server.size());
    const RowMatrix d_in = mlp::backward(*m, server, state.cut, h, x, outs, err / n, grad);
    for (std::size_t k = 0; k < server.size(); ++k) server[k] -= gamma * grad[k];
    result.cut_gradient = from_matrix(d_in);
  } else {
    const auto& q = std::get<QuadraticWorkload>(workload);
    const std::size_t split_at = state.cut_offset();
    require(activations.rows == 1 && activations.cols == split_at, ErrorCode::shape,
            "activation shape does not match the cut layer");
    Eigen::VectorXd full(static_cast<Eigen::Index>(state.params.size()));
    for (std::size_t k = 0; k < split_at; ++k) full[static_cast<Eigen::Index>(k)] = activations.data[k];
    for (std::size_t k = split_at; k < state.params.size(); ++k) {
      full[static_cast<Eigen::Index>(k)] = state.params[k];
    }
    const Eigen::ArrayXd diff = (full - q.target).array();
    result.loss = 0.5 * (q.curvature.array() * diff.square()).sum();
    require(std::isfinite(result.loss), ErrorCode::numerical_divergence, "server loss is not finite");
    const Eigen::VectorXd grad = (q.curvature.array() * diff).matrix();
    for (std::size_t k = split_at; k < state.params.size(); ++k) {
      state.params[k] -= gamma * grad[static_cast<Eigen::Index>(k)];
    }
    result.cut_gradient = Tensor{1, split_at, {grad.data(), grad.data() + split_at}};
  }
  check_finite(state.server_params(), "server parameters");
  return result;
}

void device_step(ModelState& state, const Workload& workload, const Tensor& cut_gradient, double gamma) {
  check_layout(state, workload);
  auto dev = state.device_params();
  if (const auto* m = std::get_if<MlpWorkload>(&workload)) {
    require(cut_gradient.rows == static_cast<std::size_t>(m->inputs.rows()) &&
                cut_gradient.cols == static_cast<std::size_t>(m->dims[static_cast<std::size_t>(state.cut)]),
            ErrorCode::shape, "cut gradient shape does not match the device output");
    const auto outs = mlp::forward(*m, dev, 0, state.cut, m->inputs);
    std::vector<double> grad(dev.size());
    mlp::backward(*m, dev, 0, state.cut, m->inputs, outs, to_matrix(cut_gradient), grad);
    for (std::size_t k = 0; k < dev.size(); ++k) dev[k] -= gamma * grad[k];
  } else {
    require(cut_gradient.rows == 1 && cut_gradient.cols == dev.size(), ErrorCode::shape,
            "cut gradient shape does not match the device half");
    for (std::size_t k = 0; k < dev.size(); ++k) dev[k] -= gamma * cut_gradient.data[k];
  }
  check_finite(dev, "device parameters");
}

double run_split_round(ModelState& device_copy, ModelState& server_copy, const Workload& workload, double gamma,
                       SplitChannels& channels) {
  require(device_copy.cut == server_copy.cut && device_copy.layer_offsets == server_copy.layer_offsets,
          ErrorCode::assembly, "device and server copies disagree on the split");
  if (device_copy.cut == device_copy.layer_count()) {
    check_layout(device_copy, workload);
    const double loss = local_loss(workload, device_copy.params);
    require(std::isfinite(loss), ErrorCode::numerical_divergence, "local loss is not finite");
    const Eigen::VectorXd grad = local_gradient(workload, device_copy.params);
    for (std::size_t k = 0; k < device_copy.params.size(); ++k) {
      device_copy.params[k] -= gamma * grad[static_cast<Eigen::Index>(k)];
    }
    check_finite(device_copy.params, "device parameters");
    return loss;
  }
  channels.uplink.send(device_forward(device_copy, workload));
  channels.uplink.send(batch_labels(workload));
  const Tensor activations = channels.uplink.receive();
  const Tensor labels = channels.uplink.receive();
  ServerStepResult res = server_step(server_copy, workload, activations, labels, gamma);
  channels.downlink.send(res.cut_gradient);
  device_step(device_copy, workload, channels.downlink.receive(), gamma);
  return res.loss;
}

ModelState aggregate_bias_resilient(const ModelState& prev, const std::map<int, ModelState>& updates,
                                    std::span<const double> q, std::span<const double> a) {
  require(q.size() == a.size(), ErrorCode::shape, "q and a rows differ in length");
  ModelState out = prev;
  for (const auto& [j, w] : updates) {
    require(j >= 0 && static_cast<std::size_t>(j) < q.size(), ErrorCode::invalid_argument,
            "participant " + std::to_string(j) + " outside the device row");
    const double qj = q[static_cast<std::size_t>(j)];
    require(qj > 0.0, ErrorCode::division_guard, "participant " + std::to_string(j) + " has q = 0");
    require(w.params.size() == prev.params.size(), ErrorCode::shape, "update size differs from the global model");
    const double scale = a[static_cast<std::size_t>(j)] / qj;
    for (std::size_t k = 0; k < out.params.size(); ++k) out.params[k] += scale * (w.params[k] - prev.params[k]);
  }
  return out;
}

ModelState aggregate_full(std::span<const ModelState> updates, std::span<const double> a) {
  require(!updates.empty() && updates.size() == a.size(), ErrorCode::shape, "need one weight per update");
  ModelState out = updates.front();
  std::fill(out.params.begin(), out.params.end(), 0.0);
  for (std::size_t j = 0; j < updates.size(); ++j) {
    require(updates[j].params.size() == out.params.size(), ErrorCode::shape, "updates differ in size");
    for (std::size_t k = 0; k < out.params.size(); ++k) out.params[k] += a[j] * updates[j].params[k];
  }
  return out;
}

double global_loss(const ModelState& state, std::span<const Workload> workloads, std::span<const double> a) {
  require(workloads.size() == a.size(), ErrorCode::shape, "need one weight per workload");
  double total = 0.0;
  for (std::size_t j = 0; j < workloads.size(); ++j) {
    if (a[j] == 0.0) continue;
    total += a[j] * local_loss(workloads[j], state.params);
  }
  return total;
}

SimulationResult run_simulation(const TenantSpec& tenant, const SimulationSetup& setup, std::span<const double> q,
                                int cycles, std::uint64_t seed) {
  const std::size_t n = setup.workloads.size();
  require(cycles >= 1, ErrorCode::invalid_argument, "need at least one cycle");
  require(setup.weights.size() == n && q.size() == n && setup.cuts.size() == n, ErrorCode::shape,
          "workloads, weights, cuts and q must have one entry per device");
  require(static_cast<bool>(setup.learning_rate), ErrorCode::invalid_argument, "no learning-rate schedule");
  check_probability_row(q);
  for (std::size_t j = 0; j < n; ++j) {
    require(setup.allow_absent || setup.weights[j] == 0.0 || q[j] > 0.0, ErrorCode::invalid_argument,
            "device " + std::to_string(j) + " holds data but has q = 0");
    validate_workload(setup.workloads[j]);
  }

  SimulationResult result;
  ModelState global = setup.initial;
  result.initial_loss = global_loss(global, setup.workloads, setup.weights);
  Rng rng(seed);
  SplitChannels channels;
  auto distance = [&](const ModelState& s) {
    if (!setup.reference) return std::numeric_limits<double>::quiet_NaN();
    const Eigen::Map<const Eigen::VectorXd> w(s.params.data(), static_cast<Eigen::Index>(s.params.size()));
    return (w - *setup.reference).squaredNorm();
  };

  for (int k = 1; k <= cycles; ++k) {
    const double gamma = setup.learning_rate(k);
    CycleTrace row;
    row.cycle = k;
    row.gamma = gamma;
    row.participants = draw_participation(q, rng);
    std::map<int, ModelState> updates;
    for (int j : row.participants) {
      const auto ju = static_cast<std::size_t>(j);
      ModelState device_copy = global;
      device_copy.cut = setup.mode == SplitMode::no_split ? global.layer_count() : setup.cuts[ju];
      ModelState server_copy = device_copy;
      for (int r = 0; r < tenant.sync_interval; ++r) {
        run_split_round(device_copy, server_copy, setup.workloads[ju], gamma, channels);
      }
      auto device_half = split_model(device_copy).first;
      auto server_half = split_model(server_copy).second;
      updates.emplace(j, assemble_device_model(device_half, server_half));
    }
    global = aggregate_bias_resilient(global, updates, q, setup.weights);
    check_finite(global.params, "global model");
    row.loss = global_loss(global, setup.workloads, setup.weights);
    require(std::isfinite(row.loss), ErrorCode::numerical_divergence, "global loss is not finite");
    row.dist_sq = distance(global);
    result.trace.push_back(std::move(row));
  }
  result.final_model = std::move(global);
  return result;
}

void write_cycle_trace_csv(std::ostream& out, std::span<const CycleTrace> trace) {
  const auto old_precision = out.precision(17);
  out << "cycle,participants_count,loss,gamma,dist_sq\n";
  for (const auto& r : trace) {
    out << r.cycle << ',' << r.participants.size() << ',' << r.loss << ',' << r.gamma << ',' << r.dist_sq << '\n';
  }
  out.precision(old_precision);
}

}  // namespace sflgame
