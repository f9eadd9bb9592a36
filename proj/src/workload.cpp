// SPDX-License-Identifier: Apache-2.0
#include "sflgame/workload.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sflgame/error.hpp"

namespace sflgame {

namespace {

using ConstRowMap = Eigen::Map<const RowMatrix>;
using RowMap = Eigen::Map<RowMatrix>;

template <class... Fs>
struct overloaded : Fs... {
  using Fs::operator()...;
};
template <class... Fs>
overloaded(Fs...) -> overloaded<Fs...>;

std::size_t layer_size(const MlpWorkload& w, int layer) {
  const auto in = static_cast<std::size_t>(w.dims[static_cast<std::size_t>(layer)]);
  const auto out = static_cast<std::size_t>(w.dims[static_cast<std::size_t>(layer) + 1]);
  return out * in + out;
}

bool is_hidden(const MlpWorkload& w, int layer) { return layer + 2 < static_cast<int>(w.dims.size()); }

void check_params(const Workload& w, std::span<const double> params) {
  require(params.size() == parameter_count(w), ErrorCode::shape,
          "parameter vector has " + std::to_string(params.size()) + " entries, expected " +
              std::to_string(parameter_count(w)));
}

Eigen::Map<const Eigen::VectorXd> as_vector(std::span<const double> p) {
  return {p.data(), static_cast<Eigen::Index>(p.size())};
}

RowMatrix mlp_predict(const MlpWorkload& w, std::span<const double> params) {
  const int h = static_cast<int>(w.dims.size()) - 1;
  return mlp::forward(w, params, 0, h, w.inputs).back();
}

}  // namespace

std::vector<std::size_t> mlp_offsets(const std::vector<int>& dims) {
  require(dims.size() >= 3, ErrorCode::shape, "an MLP needs at least 2 layers");
  std::vector<std::size_t> offs{0};
  for (std::size_t n = 1; n < dims.size(); ++n) {
    require(dims[n - 1] > 0 && dims[n] > 0, ErrorCode::shape, "layer widths must be positive");
    offs.push_back(offs.back() + static_cast<std::size_t>(dims[n]) * static_cast<std::size_t>(dims[n - 1]) +
                   static_cast<std::size_t>(dims[n]));
  }
  return offs;
}

std::size_t sample_count(const Workload& w) {
  return std::visit(overloaded{[](const QuadraticWorkload& q) { return static_cast<std::size_t>(q.samples); },
                               [](const MlpWorkload& m) { return static_cast<std::size_t>(m.inputs.rows()); }},
                    w);
}

std::size_t parameter_count(const Workload& w) {
  return std::visit(overloaded{[](const QuadraticWorkload& q) { return static_cast<std::size_t>(q.target.size()); },
                               [](const MlpWorkload& m) { return mlp_offsets(m.dims).back(); }},
                    w);
}

void validate_workload(const Workload& w) {
  std::visit(overloaded{[](const QuadraticWorkload& q) {
                          require(q.target.size() > 0 && q.target.size() == q.curvature.size(),
                                  ErrorCode::invalid_workload, "quadratic target and curvature sizes differ");
                          require((q.curvature.array() > 0.0).all() && q.curvature.allFinite(),
                                  ErrorCode::invalid_workload, "quadratic curvature must be positive definite");
                          require(q.target.allFinite(), ErrorCode::invalid_workload, "quadratic target not finite");
                        },
                        [](const MlpWorkload& m) {
                          mlp_offsets(m.dims);
                          require(m.inputs.rows() > 0, ErrorCode::invalid_workload, "MLP dataset is empty");
                          require(m.inputs.rows() == m.labels.rows(), ErrorCode::shape,
                                  "inputs and labels have different sample counts");
                          require(m.inputs.cols() == m.dims.front() && m.labels.cols() == m.dims.back(),
                                  ErrorCode::shape, "dataset widths do not match the layer dims");
                        }},
             w);
}

double local_loss(const Workload& w, std::span<const double> params) {
  check_params(w, params);
  return std::visit(overloaded{[&](const QuadraticWorkload& q) {
                                 const Eigen::VectorXd diff = as_vector(params) - q.target;
                                 return 0.5 * (q.curvature.array() * diff.array().square()).sum();
                               },
                               [&](const MlpWorkload& m) {
                                 const RowMatrix err = mlp_predict(m, params) - m.labels;
                                 return 0.5 * err.squaredNorm() / static_cast<double>(m.inputs.rows());
                               }},
                    w);
}

Eigen::VectorXd local_gradient(const Workload& w, std::span<const double> params) {
  check_params(w, params);
  return std::visit(
      overloaded{[&](const QuadraticWorkload& q) -> Eigen::VectorXd {
                   return (q.curvature.array() * (as_vector(params) - q.target).array()).matrix();
                 },
                 [&](const MlpWorkload& m) -> Eigen::VectorXd {
                   const int h = static_cast<int>(m.dims.size()) - 1;
                   const auto outs = mlp::forward(m, params, 0, h, m.inputs);
                   const RowMatrix upstream = (outs.back() - m.labels) / static_cast<double>(m.inputs.rows());
                   Eigen::VectorXd g(static_cast<Eigen::Index>(params.size()));
                   mlp::backward(m, params, 0, h, m.inputs, outs, upstream, {g.data(), params.size()});
                   return g;
                 }},
      w);
}

RowMatrix per_sample_gradients(const Workload& w, std::span<const double> params) {
  check_params(w, params);
  return std::visit(overloaded{[&](const QuadraticWorkload& q) -> RowMatrix {
                                 const Eigen::VectorXd g = local_gradient(w, params);
                                 const auto n = std::max<Eigen::Index>(1, static_cast<Eigen::Index>(q.samples));
                                 return g.transpose().replicate(n, 1);
                               },
                               [&](const MlpWorkload& m) -> RowMatrix {
                                 RowMatrix out(m.inputs.rows(), static_cast<Eigen::Index>(params.size()));
                                 const int h = static_cast<int>(m.dims.size()) - 1;
                                 for (Eigen::Index r = 0; r < m.inputs.rows(); ++r) {
                                   const RowMatrix x = m.inputs.row(r);
                                   const auto outs = mlp::forward(m, params, 0, h, x);
                                   const RowMatrix upstream = outs.back() - m.labels.row(r);
                                   mlp::backward(m, params, 0, h, x, outs, upstream,
                                                 {out.row(r).data(), params.size()});
                                 }
                                 return out;
                               }},
                    w);
}

namespace mlp {

std::vector<RowMatrix> forward(const MlpWorkload& w, std::span<const double> params, int first, int last,
                               const RowMatrix& x) {
  require(x.cols() == w.dims[static_cast<std::size_t>(first)], ErrorCode::shape,
          "input width " + std::to_string(x.cols()) + " does not match layer " + std::to_string(first + 1));
  std::vector<RowMatrix> outs;
  outs.reserve(static_cast<std::size_t>(last - first));
  std::size_t pos = 0;
  const RowMatrix* in = &x;
  for (int l = first; l < last; ++l) {
    const auto in_w = w.dims[static_cast<std::size_t>(l)];
    const auto out_w = w.dims[static_cast<std::size_t>(l) + 1];
    require(pos + layer_size(w, l) <= params.size(), ErrorCode::shape, "parameter span too short");
    ConstRowMap weight(params.data() + pos, out_w, in_w);
    Eigen::Map<const Eigen::RowVectorXd> bias(params.data() + pos + static_cast<std::size_t>(out_w * in_w), out_w);
    pos += layer_size(w, l);
    RowMatrix z = (*in) * weight.transpose();
    z.rowwise() += bias;
    if (is_hidden(w, l) && w.activation == Activation::tanh) z = z.array().tanh().matrix();
    outs.push_back(std::move(z));
    in = &outs.back();
  }
  return outs;
}

RowMatrix backward(const MlpWorkload& w, std::span<const double> params, int first, int last,
                   const RowMatrix& layer_in, const std::vector<RowMatrix>& outputs, const RowMatrix& upstream,
                   std::span<double> grad) {
  require(outputs.size() == static_cast<std::size_t>(last - first), ErrorCode::shape, "stale forward cache");
  require(upstream.rows() == outputs.back().rows() && upstream.cols() == outputs.back().cols(), ErrorCode::shape,
          "upstream gradient shape does not match the layer output");
  std::vector<std::size_t> starts;
  std::size_t pos = 0;
  for (int l = first; l < last; ++l) {
    starts.push_back(pos);
    pos += layer_size(w, l);
  }
  require(grad.size() >= pos && params.size() >= pos, ErrorCode::shape, "gradient span too short");
  RowMatrix d_out = upstream;
  for (int l = last - 1; l >= first; --l) {
    const auto idx = static_cast<std::size_t>(l - first);
    const auto in_w = w.dims[static_cast<std::size_t>(l)];
    const auto out_w = w.dims[static_cast<std::size_t>(l) + 1];
    const RowMatrix& out = outputs[idx];
    const RowMatrix& in = idx == 0 ? layer_in : outputs[idx - 1];
    RowMatrix dz = d_out;
    if (is_hidden(w, l) && w.activation == Activation::tanh) {
      dz = (dz.array() * (1.0 - out.array().square())).matrix();
    }
    RowMap dweight(grad.data() + starts[idx], out_w, in_w);
    Eigen::Map<Eigen::RowVectorXd> dbias(grad.data() + starts[idx] + static_cast<std::size_t>(out_w * in_w), out_w);
    dweight.noalias() = dz.transpose() * in;
    dbias = dz.colwise().sum();
    ConstRowMap weight(params.data() + starts[idx], out_w, in_w);
    d_out = dz * weight;
  }
  return d_out;
}

}  // namespace mlp

}  // namespace sflgame
