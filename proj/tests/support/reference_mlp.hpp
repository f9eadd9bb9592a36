// SPDX-License-Identifier: Apache-2.0
// Unsplit MLP written with plain loops. Shares no code with the library, so
// the split engine can be checked against it.
#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace reference {

struct Mlp {
  std::vector<int> dims;  // dims[0] input width
  bool tanh_hidden = true;
  std::vector<std::vector<double>> x;  // samples
  std::vector<std::vector<double>> y;
};

inline std::size_t weight_index(const Mlp& m, std::size_t layer, std::size_t row, std::size_t col) {
  std::size_t off = 0;
  for (std::size_t n = 0; n < layer; ++n) off += static_cast<std::size_t>(m.dims[n + 1]) * m.dims[n] + m.dims[n + 1];
  return off + row * static_cast<std::size_t>(m.dims[layer]) + col;
}

inline std::size_t bias_index(const Mlp& m, std::size_t layer, std::size_t row) {
  return weight_index(m, layer, 0, 0) + static_cast<std::size_t>(m.dims[layer + 1]) * m.dims[layer] + row;
}

inline std::size_t parameter_count(const Mlp& m) {
  const std::size_t layers = m.dims.size() - 1;
  return bias_index(m, layers - 1, 0) + static_cast<std::size_t>(m.dims.back());
}

/// Activations per layer for one sample; acts[0] is the input.
inline std::vector<std::vector<double>> forward(const Mlp& m, const std::vector<double>& w,
                                                const std::vector<double>& input) {
  const std::size_t layers = m.dims.size() - 1;
  std::vector<std::vector<double>> acts{input};
  for (std::size_t n = 0; n < layers; ++n) {
    std::vector<double> out(static_cast<std::size_t>(m.dims[n + 1]));
    for (std::size_t r = 0; r < out.size(); ++r) {
      double s = w[bias_index(m, n, r)];
      for (std::size_t c = 0; c < acts[n].size(); ++c) s += w[weight_index(m, n, r, c)] * acts[n][c];
      out[r] = (n + 1 < layers && m.tanh_hidden) ? std::tanh(s) : s;
    }
    acts.push_back(out);
  }
  return acts;
}

inline double loss(const Mlp& m, const std::vector<double>& w) {
  double total = 0.0;
  for (std::size_t k = 0; k < m.x.size(); ++k) {
    const auto acts = forward(m, w, m.x[k]);
    for (std::size_t r = 0; r < m.y[k].size(); ++r) {
      const double e = acts.back()[r] - m.y[k][r];
      total += 0.5 * e * e;
    }
  }
  return total / static_cast<double>(m.x.size());
}

inline std::vector<double> gradient(const Mlp& m, const std::vector<double>& w) {
  const std::size_t layers = m.dims.size() - 1;
  std::vector<double> g(w.size(), 0.0);
  const double inv = 1.0 / static_cast<double>(m.x.size());
  for (std::size_t k = 0; k < m.x.size(); ++k) {
    const auto acts = forward(m, w, m.x[k]);
    std::vector<double> delta(acts.back().size());
    for (std::size_t r = 0; r < delta.size(); ++r) delta[r] = (acts.back()[r] - m.y[k][r]) * inv;
    for (std::size_t n = layers; n-- > 0;) {
      if (n + 1 < layers && m.tanh_hidden) {
        for (std::size_t r = 0; r < delta.size(); ++r) delta[r] *= 1.0 - acts[n + 1][r] * acts[n + 1][r];
      }
      std::vector<double> prev(acts[n].size(), 0.0);
      for (std::size_t r = 0; r < delta.size(); ++r) {
        g[bias_index(m, n, r)] += delta[r];
        for (std::size_t c = 0; c < acts[n].size(); ++c) {
          g[weight_index(m, n, r, c)] += delta[r] * acts[n][c];
          prev[c] += w[weight_index(m, n, r, c)] * delta[r];
        }
      }
      delta = prev;
    }
  }
  return g;
}

inline std::vector<double> sgd_step(const Mlp& m, const std::vector<double>& w, double gamma) {
  const auto g = gradient(m, w);
  std::vector<double> out(w);
  for (std::size_t k = 0; k < w.size(); ++k) out[k] -= gamma * g[k];
  return out;
}

}  // namespace reference
