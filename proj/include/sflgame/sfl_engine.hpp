// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include "sflgame/channel.hpp"
#include "sflgame/model_state.hpp"
#include "sflgame/rng.hpp"
#include "sflgame/system_model.hpp"
#include "sflgame/workload.hpp"

namespace sflgame {

/// Indices of devices that join this cycle; device j joins with probability q[j].
std::vector<int> draw_participation(std::span<const double> q, Rng& rng);
std::vector<int> draw_participation(std::span<const double> q, std::uint64_t seed);

/// Output of the device half on the full local batch. For the quadratic kind
/// the device parameters themselves are handed over unchanged.
Tensor device_forward(const ModelState& state, const Workload& workload);

/// Labels that travel with the activations (empty for the quadratic kind).
Tensor batch_labels(const Workload& workload);

struct ServerStepResult {
  double loss = 0.0;
  Tensor cut_gradient;
};

/// Server half: forward from the cut, loss, backward, one gradient step on the
/// server parameters. Returns the loss before the step and dLoss/d(activation).
ServerStepResult server_step(ModelState& state, const Workload& workload, const Tensor& activations,
                             const Tensor& labels, double gamma);

/// Device half: backpropagates `cut_gradient` and steps the device parameters.
void device_step(ModelState& state, const Workload& workload, const Tensor& cut_gradient, double gamma);

struct SplitChannels {
  Channel uplink;
  Channel downlink;
};

/// One training round between a device and the server. `device_copy` and
/// `server_copy` start from the same model; each side only touches its half.
/// In no-split mode (cut = H) the device takes a plain local step. Returns the
/// loss before the step.
double run_split_round(ModelState& device_copy, ModelState& server_copy, const Workload& workload, double gamma,
                       SplitChannels& channels);

/// prev + sum over participants of (a_j / q_j)(w_j - prev), reduced in
/// ascending device order.
ModelState aggregate_bias_resilient(const ModelState& prev, const std::map<int, ModelState>& updates,
                                    std::span<const double> q, std::span<const double> a);

/// sum_j a_j w_j over every device.
ModelState aggregate_full(std::span<const ModelState> updates, std::span<const double> a);

double global_loss(const ModelState& state, std::span<const Workload> workloads, std::span<const double> a);

struct CycleTrace {
  int cycle = 0;
  std::vector<int> participants;
  double loss = 0.0;
  double gamma = 0.0;
  double dist_sq = 0.0;  // NaN when no reference point is known
};

struct SimulationSetup {
  std::vector<Workload> workloads;  // one per device
  std::vector<double> weights;      // a_j over all devices, sums to 1
  std::vector<int> cuts;            // per device, in the workload layout
  SplitMode mode = SplitMode::split;
  ModelState initial;
  std::function<double(int)> learning_rate;  // cycle k >= 1 -> gamma
  std::optional<Eigen::VectorXd> reference;  // distance target, e.g. the global minimizer
  /// Permit q = 0 on data-holding devices. They never join, so the
  /// aggregate is biased; used to simulate policies that starve devices.
  bool allow_absent = false;
};

struct SimulationResult {
  std::vector<CycleTrace> trace;
  ModelState final_model;
  double initial_loss = 0.0;
};

/// Bias-resilient training: per cycle draw participants, run I split rounds on
/// each from the current global model, reassemble, aggregate, record.
SimulationResult run_simulation(const TenantSpec& tenant, const SimulationSetup& setup, std::span<const double> q,
                                int cycles, std::uint64_t seed);

void write_cycle_trace_csv(std::ostream& out, std::span<const CycleTrace> trace);

}  // namespace sflgame
