// SPDX-License-Identifier: Apache-2.0
#include "sflgame/model_state.hpp"

#include <string>

#include "sflgame/error.hpp"

namespace sflgame {

ModelState ModelState::zeros(std::vector<std::size_t> offsets, int cut) {
  ModelState s;
  s.params.assign(offsets.empty() ? 0 : offsets.back(), 0.0);
  s.cut = cut;
  s.layer_offsets = std::move(offsets);
  s.validate(cut == s.layer_count() ? SplitMode::no_split : SplitMode::split);
  return s;
}

void ModelState::validate(SplitMode mode) const {
  require(layer_offsets.size() >= 3, ErrorCode::shape, "model needs at least 2 layers");
  require(layer_offsets.front() == 0 && layer_offsets.back() == params.size(), ErrorCode::shape,
          "layer offsets do not cover the parameter vector");
  for (std::size_t n = 1; n < layer_offsets.size(); ++n) {
    require(layer_offsets[n] >= layer_offsets[n - 1], ErrorCode::shape, "layer offsets must be nondecreasing");
  }
  const int h = layer_count();
  if (mode == SplitMode::no_split) {
    require(cut == h, ErrorCode::invalid_cut, "no-split model must have cut = H");
  } else {
    require(cut >= 1 && cut <= h - 1, ErrorCode::invalid_cut, "cut " + std::to_string(cut) + " outside [1, H-1]");
  }
}

std::pair<SubModel, SubModel> split_model(const ModelState& state) {
  const auto dev = state.device_params();
  const auto srv = state.server_params();
  SubModel d{Side::device, state.cut, state.layer_offsets, {dev.begin(), dev.end()}};
  SubModel s{Side::server, state.cut, state.layer_offsets, {srv.begin(), srv.end()}};
  return {std::move(d), std::move(s)};
}

ModelState assemble_device_model(const SubModel& device_side, const SubModel& server_side) {
  require(device_side.side == Side::device && server_side.side == Side::server, ErrorCode::assembly,
          "assembly needs one device half and one server half");
  require(device_side.cut == server_side.cut, ErrorCode::assembly,
          "cut mismatch: device " + std::to_string(device_side.cut) + " vs server " + std::to_string(server_side.cut));
  require(device_side.layer_offsets == server_side.layer_offsets, ErrorCode::assembly, "layer layouts differ");
  const auto& offs = device_side.layer_offsets;
  require(device_side.cut >= 0 && static_cast<std::size_t>(device_side.cut) < offs.size(), ErrorCode::assembly,
          "cut outside layout");
  const std::size_t split_at = offs[static_cast<std::size_t>(device_side.cut)];
  require(device_side.params.size() == split_at && server_side.params.size() == offs.back() - split_at,
          ErrorCode::assembly, "half sizes do not match the layout");
  ModelState out;
  out.cut = device_side.cut;
  out.layer_offsets = offs;
  out.params.reserve(offs.back());
  out.params.insert(out.params.end(), device_side.params.begin(), device_side.params.end());
  out.params.insert(out.params.end(), server_side.params.begin(), server_side.params.end());
  return out;
}

std::vector<std::size_t> even_offsets(std::size_t dim, int layers) {
  require(layers >= 2, ErrorCode::shape, "need at least 2 layers");
  require(dim >= static_cast<std::size_t>(layers), ErrorCode::shape, "each layer needs at least one parameter");
  std::vector<std::size_t> offs(static_cast<std::size_t>(layers) + 1, 0);
  for (int n = 1; n <= layers; ++n) offs[static_cast<std::size_t>(n)] = dim * static_cast<std::size_t>(n) / layers;
  return offs;
}

}  // namespace sflgame
