// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "sflgame/system_model.hpp"

namespace sflgame {

/// Flat parameter vector. `layer_offsets` has H+1 entries, starting at 0 and
/// ending at params.size(); layers 1..cut live on the device.
struct ModelState {
  std::vector<double> params;
  int cut = 1;
  std::vector<std::size_t> layer_offsets;

  static ModelState zeros(std::vector<std::size_t> offsets, int cut);

  int layer_count() const { return static_cast<int>(layer_offsets.size()) - 1; }
  std::size_t cut_offset() const { return layer_offsets[static_cast<std::size_t>(cut)]; }
  std::span<double> device_params() { return std::span(params).first(cut_offset()); }
  std::span<const double> device_params() const { return std::span(params).first(cut_offset()); }
  std::span<double> server_params() { return std::span(params).subspan(cut_offset()); }
  std::span<const double> server_params() const { return std::span(params).subspan(cut_offset()); }

  void validate(SplitMode mode = SplitMode::split) const;
};

enum class Side { device, server };

/// One half of a split model. Keeps the full layout so the halves can be
/// checked against each other on reassembly.
struct SubModel {
  Side side = Side::device;
  int cut = 1;
  std::vector<std::size_t> layer_offsets;
  std::vector<double> params;
};

std::pair<SubModel, SubModel> split_model(const ModelState& state);

/// Concatenates device and server halves into one model.
ModelState assemble_device_model(const SubModel& device_side, const SubModel& server_side);

/// Offsets for `layers` layers of near-equal width covering `dim` entries.
std::vector<std::size_t> even_offsets(std::size_t dim, int layers);

}  // namespace sflgame
