// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <span>
#include <variant>
#include <vector>

namespace sflgame {

/// F(w) = 0.5 * sum_k h_k (w_k - t_k)^2 with diagonal curvature h.
struct QuadraticWorkload {
  Eigen::VectorXd target;
  Eigen::VectorXd curvature;
  double samples = 1.0;  // data size, only used for weighting
};

enum class Activation { identity, tanh };

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Fully connected net; hidden layers apply `activation`, the last layer is
/// linear. Loss is the mean over samples of 0.5 * ||y_hat - y||^2. Layer n
/// stores its weight matrix (dims[n] x dims[n-1], row-major) then its bias.
struct MlpWorkload {
  std::vector<int> dims;  // dims[0] is the input width, dims.size() = H + 1
  Activation activation = Activation::tanh;
  RowMatrix inputs;  // one sample per row
  RowMatrix labels;
};

using Workload = std::variant<QuadraticWorkload, MlpWorkload>;

std::vector<std::size_t> mlp_offsets(const std::vector<int>& dims);

std::size_t sample_count(const Workload& w);
std::size_t parameter_count(const Workload& w);
void validate_workload(const Workload& w);

double local_loss(const Workload& w, std::span<const double> params);
Eigen::VectorXd local_gradient(const Workload& w, std::span<const double> params);

/// Per-sample gradients, one row per sample. For the quadratic kind every row
/// equals the full gradient.
RowMatrix per_sample_gradients(const Workload& w, std::span<const double> params);

namespace mlp {

/// Forward pass through layers [first, last) (0-based). `params` starts at the
/// first entry of layer `first`. Returns the output of each layer in the range.
std::vector<RowMatrix> forward(const MlpWorkload& w, std::span<const double> params, int first, int last,
                               const RowMatrix& x);

/// Backward pass through layers [first, last). `layer_in` is the input to
/// layer `first`, `outputs` is what `forward` returned, `upstream` is dLoss
/// w.r.t. the output of layer last-1. `grad` is laid out like `params` and is
/// overwritten. Returns dLoss w.r.t. `layer_in`.
RowMatrix backward(const MlpWorkload& w, std::span<const double> params, int first, int last,
                   const RowMatrix& layer_in, const std::vector<RowMatrix>& outputs, const RowMatrix& upstream,
                   std::span<double> grad);

}  // namespace mlp

}  // namespace sflgame
