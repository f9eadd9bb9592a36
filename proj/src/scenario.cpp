// SPDX-License-Identifier: Apache-2.0
#include "sflgame/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "sflgame/error.hpp"
#include "sflgame/rng.hpp"

namespace sflgame {

namespace {

using nlohmann::json;

// Seed streams, kept stable so adding a stream never shifts the others.
enum Stream : std::uint64_t { kDevices = 1, kDataOrder = 2, kWorkload = 3, kMlpData = 4 };

LayerProfile layer(double fwd, double bwd, double act_bits, double param_bits) {
  return LayerProfile{fwd, bwd, act_bits, act_bits, param_bits};
}

struct Preset {
  TenantSpec spec;
  double budget_per_device;
  double total_samples;
};

// Approximate per-sample profiles of the four fine-tuning tasks. Only layers
// that are trained contribute parameter bits to synchronization.
Preset make_preset(const std::string& name) {
  Preset p{};
  auto& t = p.spec;
  t.name = name;
  if (name == "vit-b16") {
    const double tokens_bits = 197 * 768 * 32.0;
    t.layers.push_back(layer(0.231e9, 0.462e9, tokens_bits, 741e3 * 32));
    for (int b = 0; b < 12; ++b) t.layers.push_back(layer(2.91e9, 5.82e9, tokens_bits, 7.08e6 * 32));
    t.layers.push_back(layer(6.1e3, 12.3e3, 4 * 32.0, 3076 * 32.0));
    t.deadline_s = 4.0e4;
    t.smoothness = 2.0;
    t.strong_convexity = 0.5;
    p.budget_per_device = 0.20;
    p.total_samples = 4000;
  } else if (name == "bert-base") {
    const double tokens_bits = 128 * 768 * 32.0;
    t.layers.push_back(layer(0.4e6, 0.8e6, tokens_bits, 23.84e6 * 32));
    for (int b = 0; b < 12; ++b) t.layers.push_back(layer(1.86e9, 3.72e9, tokens_bits, 7.08e6 * 32));
    t.layers.push_back(layer(1.18e6, 2.36e6, 2 * 32.0, 592e3 * 32));
    t.deadline_s = 6.0e4;
    t.smoothness = 1.5;
    t.strong_convexity = 0.3;
    p.budget_per_device = 0.16;
    p.total_samples = 8551;
  } else if (name == "whisper-base") {
    const double enc_bits = 1500 * 512 * 32.0;
    const double dec_bits = 64 * 512 * 32.0;
    const double adapter_bits = 2 * 512 * 64 * 32.0;
    t.layers.push_back(layer(3.1e9, 0.0, enc_bits, 0.0));
    for (int b = 0; b < 6; ++b) t.layers.push_back(layer(1.4e10, 1.4e10, enc_bits, adapter_bits));
    for (int b = 0; b < 6; ++b) t.layers.push_back(layer(7.4e8, 7.4e8, dec_bits, adapter_bits));
    t.layers.push_back(layer(3.4e9, 3.4e9, 64 * 51865 * 32.0, 0.0));
    t.deadline_s = 1.5e5;
    t.smoothness = 2.5;
    t.strong_convexity = 0.4;
    p.budget_per_device = 0.24;
    p.total_samples = 5000;
  } else if (name == "llama2-7b-lora") {
    const double tokens_bits = 256 * 4096 * 16.0;
    const double lora_bits = 2 * 2 * 4096 * 8 * 32.0;
    t.layers.push_back(layer(1.0e6, 0.0, tokens_bits, 0.0));
    for (int b = 0; b < 32; ++b) t.layers.push_back(layer(1.04e11, 1.04e11, tokens_bits, lora_bits));
    t.layers.push_back(layer(6.7e10, 6.7e10, 256 * 32000 * 16.0, 0.0));
    t.deadline_s = 4.0e5;
    t.smoothness = 1.0;
    t.strong_convexity = 0.2;
    p.budget_per_device = 0.28;
    p.total_samples = 2000;
  } else {
    fail(ErrorCode::config, "unknown tenant preset '" + name + "'");
  }
  return p;
}

// ---------------------------------------------------------------------------
// Strict JSON reading with field paths in every error.

class Reader {
 public:
  Reader(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) fail(ErrorCode::config, path_ + ": expected an object");
  }

  template <class T>
  void read(const char* key, T& out) {
    seen_.insert(key);
    if (!obj_.contains(key)) return;
    const std::string at = field(key);
    try {
      out = obj_.at(key).get<T>();
    } catch (const json::exception&) {
      fail(ErrorCode::config, at + ": wrong type");
    }
  }

  template <class T>
  void read_optional(const char* key, std::optional<T>& out) {
    T v{};
    const bool had = obj_.contains(key);
    read(key, v);
    if (had) out = v;
  }

  void read_range(const char* key, Range& out) {
    seen_.insert(key);
    if (!obj_.contains(key)) return;
    const auto& v = obj_.at(key);
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
      fail(ErrorCode::config, field(key) + ": expected [lo, hi]");
    }
    out = Range{v[0].get<double>(), v[1].get<double>()};
    if (!(out.lo > 0.0 && out.lo <= out.hi)) fail(ErrorCode::config, field(key) + ": need 0 < lo <= hi");
  }

  const json* child(const char* key) {
    seen_.insert(key);
    return obj_.contains(key) ? &obj_.at(key) : nullptr;
  }

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  void reject_unknown() const {
    for (auto it = obj_.begin(); it != obj_.end(); ++it) {
      if (!seen_.count(it.key())) fail(ErrorCode::config, field(it.key()) + ": unknown field");
    }
  }

 private:
  const json& obj_;
  std::string path_;
  std::set<std::string> seen_;
};

void check(bool ok, const std::string& path, const std::string& what) {
  if (!ok) fail(ErrorCode::config, path + ": " + what);
}

json range_json(const Range& r) { return json::array({r.lo, r.hi}); }

std::vector<double> power_law_sizes(int n, double total, double exponent, Rng& rng) {
  std::vector<double> weight(static_cast<std::size_t>(n));
  for (int r = 0; r < n; ++r) weight[static_cast<std::size_t>(r)] = std::pow(r + 1.0, -exponent);
  const double norm = std::accumulate(weight.begin(), weight.end(), 0.0);
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  for (int k = n - 1; k > 0; --k) {
    const auto pick = static_cast<int>(rng.below(static_cast<std::uint64_t>(k) + 1));
    std::swap(order[static_cast<std::size_t>(k)], order[static_cast<std::size_t>(pick)]);
  }
  std::vector<double> sizes(static_cast<std::size_t>(n));
  for (int r = 0; r < n; ++r) {
    sizes[static_cast<std::size_t>(order[static_cast<std::size_t>(r)])] =
        std::max(1.0, std::round(total * weight[static_cast<std::size_t>(r)] / norm));
  }
  return sizes;
}

QuadraticWorkload quadratic_for(const TenantSpec& t, const Eigen::VectorXd& center, double spread, int dim,
                                bool pin_extremes, double samples, Rng& rng) {
  QuadraticWorkload q;
  q.samples = samples;
  q.target.resize(dim);
  q.curvature.resize(dim);
  for (int k = 0; k < dim; ++k) {
    q.target(k) = center(k) + spread * rng.normal();
    q.curvature(k) = rng.uniform(t.strong_convexity, t.smoothness);
  }
  if (pin_extremes) {
    q.curvature(0) = t.strong_convexity;
    q.curvature(dim - 1) = t.smoothness;
  }
  return q;
}

MlpWorkload mlp_for(const std::vector<int>& dims, const RowMatrix& teacher_in, double shift, int samples, Rng& rng) {
  MlpWorkload m;
  m.dims = dims;
  m.activation = Activation::tanh;
  m.inputs.resize(samples, dims.front());
  m.labels.resize(samples, dims.back());
  for (int r = 0; r < samples; ++r) {
    for (int c = 0; c < dims.front(); ++c) m.inputs(r, c) = rng.normal();
  }
  // Smooth teacher: y = tanh(x W) + shift, with a device-specific shift.
  const RowMatrix y = (m.inputs * teacher_in).array().tanh().matrix();
  m.labels = y.array() + shift;
  return m;
}

}  // namespace

std::string_view to_string(WorkloadKind kind) { return kind == WorkloadKind::quadratic ? "quadratic" : "mlp"; }

std::vector<std::string> preset_names() { return {"vit-b16", "bert-base", "whisper-base", "llama2-7b-lora"}; }

TenantSpec tenant_preset(const std::string& name) { return make_preset(name).spec; }

ScenarioConfig parse_config(const json& doc) {
  ScenarioConfig c;
  Reader r(doc, "");
  r.read("schema_version", c.schema_version);
  check(c.schema_version == 1, "schema_version", "unsupported version " + std::to_string(c.schema_version));
  r.read("seed", c.seed);
  std::string policy = std::string(to_string(c.policy));
  r.read("policy", policy);
  try {
    c.policy = parse_policy(policy);
  } catch (const Error&) {
    fail(ErrorCode::config, "policy: unknown value '" + policy + "'");
  }
  std::string workload = std::string(to_string(c.workload));
  r.read("workload", workload);
  check(workload == "quadratic" || workload == "mlp", "workload", "expected quadratic or mlp");
  c.workload = workload == "quadratic" ? WorkloadKind::quadratic : WorkloadKind::mlp;
  r.read("devices", c.device_count);
  check(c.device_count >= 1, "devices", "must be >= 1");
  r.read("tenant_count", c.tenant_count);
  check(c.tenant_count >= 1, "tenant_count", "must be >= 1");

  if (const json* list = r.child("tenants")) {
    check(list->is_array(), "tenants", "expected an array");
    for (std::size_t k = 0; k < list->size(); ++k) {
      const std::string path = "tenants[" + std::to_string(k) + "]";
      Reader t((*list)[k], path);
      TenantConfig tc;
      t.read("preset", tc.preset);
      try {
        make_preset(tc.preset);
      } catch (const Error&) {
        fail(ErrorCode::config, path + ".preset: unknown preset '" + tc.preset + "'");
      }
      t.read_optional("budget_per_device", tc.budget_per_device);
      t.read_optional("deadline_s", tc.deadline_s);
      t.read_optional("total_samples", tc.total_samples);
      t.read_optional("smoothness", tc.smoothness);
      t.read_optional("strong_convexity", tc.strong_convexity);
      t.read_optional("cost_scale", tc.cost_scale);
      t.reject_unknown();
      check(!tc.budget_per_device || *tc.budget_per_device > 0, path + ".budget_per_device", "must be > 0");
      check(!tc.deadline_s || *tc.deadline_s > 0, path + ".deadline_s", "must be > 0");
      check(!tc.total_samples || *tc.total_samples >= 1, path + ".total_samples", "must be >= 1");
      check(!tc.cost_scale || *tc.cost_scale > 0, path + ".cost_scale", "must be > 0");
      c.tenants.push_back(tc);
    }
    check(!c.tenants.empty(), "tenants", "must not be empty");
    c.tenant_count = static_cast<int>(c.tenants.size());
  }

  if (const json* g = r.child("generation")) {
    Reader gr(*g, "generation");
    gr.read_range("compute_flops", c.compute_flops);
    gr.read_range("downlink_bps", c.downlink_bps);
    gr.read_range("uplink_bps", c.uplink_bps);
    gr.read_range("watts", c.watts);
    gr.read("cost_per_watt", c.cost_per_watt);
    gr.read("cost_exponent", c.cost_exponent);
    gr.read("server_total_flops", c.server_total_flops);
    gr.read("power_law_exponent", c.power_law_exponent);
    gr.read("agg_time_s", c.agg_time_s);
    gr.reject_unknown();
    check(c.cost_per_watt > 0, "generation.cost_per_watt", "must be > 0");
    check(c.cost_exponent > 1.0, "generation.cost_exponent", "must be > 1 for the pricing game");
    check(c.server_total_flops > 0, "generation.server_total_flops", "must be > 0");
    check(c.power_law_exponent >= 0, "generation.power_law_exponent", "must be >= 0");
    check(c.agg_time_s >= 0, "generation.agg_time_s", "must be >= 0");
  }

  if (const json* s = r.child("training")) {
    Reader sr(*s, "training");
    sr.read("sync_interval", c.sync_interval);
    sr.read("model_dim", c.model_dim);
    sr.read("model_layers", c.model_layers);
    sr.read("target_spread", c.target_spread);
    sr.read("trust_radius", c.trust_radius);
    std::string rule = c.lr_rule == LrRule::kappa ? "kappa" : "literal_max";
    sr.read("lr_rule", rule);
    check(rule == "kappa" || rule == "literal_max", "training.lr_rule", "expected kappa or literal_max");
    c.lr_rule = rule == "kappa" ? LrRule::kappa : LrRule::literal_max;
    sr.read("mlp_samples", c.mlp_samples);
    sr.read("warmup_rounds", c.warmup_rounds);
    sr.read("replicates", c.replicates);
    sr.read("target_factor", c.target_factor);
    sr.reject_unknown();
    check(c.sync_interval >= 1, "training.sync_interval", "must be >= 1");
    check(c.model_layers >= 2, "training.model_layers", "must be >= 2");
    check(c.model_dim >= c.model_layers || c.workload == WorkloadKind::mlp, "training.model_dim",
          "quadratic models need at least one parameter per layer");
    check(c.model_dim >= 1, "training.model_dim", "must be >= 1");
    check(c.target_spread >= 0, "training.target_spread", "must be >= 0");
    check(c.mlp_samples >= 1, "training.mlp_samples", "must be >= 1");
    check(c.warmup_rounds >= 1, "training.warmup_rounds", "must be >= 1");
    check(c.replicates >= 1, "training.replicates", "must be >= 1");
    check(c.target_factor > 1.0, "training.target_factor", "must be > 1");
  }

  if (const json* g = r.child("game")) {
    Reader gr(*g, "game");
    gr.read("q_floor", c.q_floor);
    gr.read("eps_improve", c.eps_improve);
    gr.read("multistart", c.multistart);
    gr.read("max_iterations", c.max_iterations);
    gr.reject_unknown();
    check(c.q_floor > 0 && c.q_floor < 1, "game.q_floor", "must be in (0, 1)");
    check(c.eps_improve > 0, "game.eps_improve", "must be > 0");
    check(c.multistart >= 0, "game.multistart", "must be >= 0");
    check(c.max_iterations >= 1, "game.max_iterations", "must be >= 1");
  }

  if (const json* t = r.child("tolerances")) {
    Reader tr(*t, "tolerances");
    tr.read("kkt", c.tolerances.kkt);
    tr.read("unbiased", c.tolerances.unbiased);
    tr.read("split_equivalence", c.tolerances.split_equivalence);
    tr.reject_unknown();
  }
  r.reject_unknown();
  return c;
}

ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::config, path + ": cannot open");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::config, path + ": " + e.what());
  }
  return parse_config(doc);
}

json to_json(const ScenarioConfig& c) {
  json tenants = json::array();
  for (const auto& t : c.tenants) {
    json o{{"preset", t.preset}};
    if (t.budget_per_device) o["budget_per_device"] = *t.budget_per_device;
    if (t.deadline_s) o["deadline_s"] = *t.deadline_s;
    if (t.total_samples) o["total_samples"] = *t.total_samples;
    if (t.smoothness) o["smoothness"] = *t.smoothness;
    if (t.strong_convexity) o["strong_convexity"] = *t.strong_convexity;
    if (t.cost_scale) o["cost_scale"] = *t.cost_scale;
    tenants.push_back(o);
  }
  json doc{
      {"schema_version", c.schema_version},
      {"seed", c.seed},
      {"policy", std::string(to_string(c.policy))},
      {"workload", std::string(to_string(c.workload))},
      {"devices", c.device_count},
      {"tenant_count", c.tenant_count},
      {"generation",
       {{"compute_flops", range_json(c.compute_flops)},
        {"downlink_bps", range_json(c.downlink_bps)},
        {"uplink_bps", range_json(c.uplink_bps)},
        {"watts", range_json(c.watts)},
        {"cost_per_watt", c.cost_per_watt},
        {"cost_exponent", c.cost_exponent},
        {"server_total_flops", c.server_total_flops},
        {"power_law_exponent", c.power_law_exponent},
        {"agg_time_s", c.agg_time_s}}},
      {"training",
       {{"sync_interval", c.sync_interval},
        {"model_dim", c.model_dim},
        {"model_layers", c.model_layers},
        {"target_spread", c.target_spread},
        {"trust_radius", c.trust_radius},
        {"lr_rule", c.lr_rule == LrRule::kappa ? "kappa" : "literal_max"},
        {"mlp_samples", c.mlp_samples},
        {"warmup_rounds", c.warmup_rounds},
        {"replicates", c.replicates},
        {"target_factor", c.target_factor}}},
      {"game",
       {{"q_floor", c.q_floor},
        {"eps_improve", c.eps_improve},
        {"multistart", c.multistart},
        {"max_iterations", c.max_iterations}}},
      {"tolerances",
       {{"kkt", c.tolerances.kkt},
        {"unbiased", c.tolerances.unbiased},
        {"split_equivalence", c.tolerances.split_equivalence}}},
  };
  if (!tenants.empty()) doc["tenants"] = tenants;
  return doc;
}

void Scenario::validate() const {
  require(!tenants.empty() && !devices.empty(), ErrorCode::invalid_scenario, "scenario needs tenants and devices");
  require(workloads.size() == tenants.size(), ErrorCode::invalid_scenario, "one workload set per tenant");
  for (std::size_t i = 0; i < tenants.size(); ++i) {
    tenants[i].validate();
    require(tenants[i].id == static_cast<int>(i), ErrorCode::invalid_scenario, "tenant ids must be 0..M-1");
    require(workloads[i].per_device.size() == devices.size(), ErrorCode::invalid_scenario,
            "one workload per device per tenant");
  }
  for (const auto& d : devices) d.validate(tenants.size());
}

Scenario generate_scenario(const ScenarioConfig& config, std::uint64_t seed) {
  Scenario s;
  s.config = config;
  s.seed = seed;
  const int n = config.device_count;
  std::vector<TenantConfig> tcs = config.tenants;
  if (tcs.empty()) {
    const auto names = preset_names();
    for (int i = 0; i < config.tenant_count; ++i) {
      TenantConfig tc;
      tc.preset = names[static_cast<std::size_t>(i) % names.size()];
      tcs.push_back(tc);
    }
  }
  const int m = static_cast<int>(tcs.size());

  std::vector<double> totals;
  std::vector<double> cost_scales;
  for (int i = 0; i < m; ++i) {
    const auto& tc = tcs[static_cast<std::size_t>(i)];
    Preset p = make_preset(tc.preset);
    TenantSpec t = p.spec;
    t.id = i;
    t.budget = tc.budget_per_device.value_or(p.budget_per_device) * n;
    t.deadline_s = tc.deadline_s.value_or(t.deadline_s);
    t.smoothness = tc.smoothness.value_or(t.smoothness);
    t.strong_convexity = tc.strong_convexity.value_or(t.strong_convexity);
    t.server_flops = config.server_total_flops / m;
    t.sync_interval = config.sync_interval;
    t.agg_time_s = config.agg_time_s;
    s.tenants.push_back(t);
    totals.push_back(tc.total_samples.value_or(p.total_samples));
    cost_scales.push_back(tc.cost_scale.value_or(1.0));
  }

  Rng dev_rng(derive_seed(seed, kDevices));
  for (int j = 0; j < n; ++j) {
    DeviceSpec d;
    d.id = j;
    d.compute_flops = dev_rng.uniform(config.compute_flops.lo, config.compute_flops.hi);
    d.downlink_bps = dev_rng.uniform(config.downlink_bps.lo, config.downlink_bps.hi);
    d.uplink_bps = dev_rng.uniform(config.uplink_bps.lo, config.uplink_bps.hi);
    const double watts = dev_rng.uniform(config.watts.lo, config.watts.hi);
    d.cost_exponent = config.cost_exponent;
    for (int i = 0; i < m; ++i) d.cost_coeff.push_back(watts * config.cost_per_watt * cost_scales[static_cast<std::size_t>(i)]);
    d.data_sizes.assign(static_cast<std::size_t>(m), 0.0);
    s.devices.push_back(std::move(d));
  }
  for (int i = 0; i < m; ++i) {
    Rng order_rng(derive_seed(seed, kDataOrder, static_cast<std::uint64_t>(i)));
    const auto sizes = power_law_sizes(n, totals[static_cast<std::size_t>(i)], config.power_law_exponent, order_rng);
    for (int j = 0; j < n; ++j) s.devices[static_cast<std::size_t>(j)].data_sizes[static_cast<std::size_t>(i)] = sizes[static_cast<std::size_t>(j)];
  }

  for (int i = 0; i < m; ++i) {
    const auto& t = s.tenants[static_cast<std::size_t>(i)];
    std::vector<double> a(static_cast<std::size_t>(n));
    double total = 0.0;
    for (int j = 0; j < n; ++j) total += s.devices[static_cast<std::size_t>(j)].data_sizes[static_cast<std::size_t>(i)];
    for (int j = 0; j < n; ++j) a[static_cast<std::size_t>(j)] = s.devices[static_cast<std::size_t>(j)].data_sizes[static_cast<std::size_t>(i)] / total;

    TenantWorkloads tw;
    Rng wl_rng(derive_seed(seed, kWorkload, static_cast<std::uint64_t>(i)));
    if (config.workload == WorkloadKind::quadratic) {
      const int dim = config.model_dim;
      Eigen::VectorXd center(dim);
      for (int k = 0; k < dim; ++k) center(k) = 2.0 + wl_rng.normal();
      std::vector<QuadraticWorkload> quads;
      for (int j = 0; j < n; ++j) {
        quads.push_back(quadratic_for(t, center, config.target_spread, dim, j == 0 && dim >= 2,
                                      s.devices[static_cast<std::size_t>(j)].data_sizes[static_cast<std::size_t>(i)], wl_rng));
        tw.per_device.emplace_back(quads.back());
      }
      tw.initial = ModelState::zeros(even_offsets(static_cast<std::size_t>(dim), config.model_layers), 1);
      const Eigen::VectorXd w0 = Eigen::VectorXd::Zero(dim);
      auto stats = exact_quadratic_stats(quads, a, w0, t.sync_interval, config.trust_radius);
      stats.params.lr_rule = config.lr_rule;
      tw.bound = stats.params;
      tw.minimizer = stats.minimizer;
      tw.trust_radius = stats.trust_radius;
    } else {
      std::vector<int> dims{3};
      for (int l = 0; l + 1 < config.model_layers; ++l) dims.push_back(config.model_dim);
      dims.push_back(1);
      RowMatrix teacher(3, 1);
      for (int k = 0; k < 3; ++k) teacher(k, 0) = wl_rng.normal();
      Rng data_rng(derive_seed(seed, kMlpData, static_cast<std::uint64_t>(i)));
      for (int j = 0; j < n; ++j) {
        tw.per_device.emplace_back(mlp_for(dims, teacher, config.target_spread * data_rng.normal(),
                                           config.mlp_samples, data_rng));
      }
      tw.initial = ModelState::zeros(mlp_offsets(dims), 1);
      for (auto& v : tw.initial.params) v = 0.3 * wl_rng.normal();
      const double gamma0 = 0.05;
      const auto records = record_warmup(tw.per_device, a, tw.initial.params, gamma0, config.warmup_rounds);
      const auto est = estimate_gradient_stats(records, static_cast<std::size_t>(n), 1.2, config.warmup_rounds);
      BoundParams b;
      b.smoothness = t.smoothness;
      b.strong_convexity = t.strong_convexity;
      b.sync_interval = t.sync_interval;
      b.G_sq = est.G_sq;
      b.sigma_sq = est.sigma_sq;
      b.a = a;
      b.F_j_min.assign(static_cast<std::size_t>(n), 0.0);
      b.lr_rule = config.lr_rule;
      tw.bound = b;
    }
    s.workloads.push_back(std::move(tw));
  }
  s.validate();
  return s;
}

int workload_cut(const TenantSpec& tenant, int tenant_cut, int workload_layers) {
  const double scaled = std::round(static_cast<double>(tenant_cut) * workload_layers / tenant.layer_count());
  return std::clamp(static_cast<int>(scaled), 1, workload_layers - 1);
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t scenario_hash(const Scenario& s) {
  std::ostringstream os;
  os.precision(17);
  os << to_json(s.config).dump() << '|' << s.seed;
  for (const auto& t : s.tenants) os << '|' << t.id << ',' << t.budget << ',' << t.deadline_s << ',' << t.server_flops;
  for (const auto& d : s.devices) {
    os << '|' << d.compute_flops << ',' << d.uplink_bps << ',' << d.downlink_bps;
    for (double v : d.data_sizes) os << ',' << v;
    for (double v : d.cost_coeff) os << ',' << v;
  }
  for (const auto& w : s.workloads) {
    for (double g : w.bound.G_sq) os << ',' << g;
  }
  return fnv1a64(os.str());
}

}  // namespace sflgame
