#pragma once

// Run configuration (JSON). Every key must be present and no unknown key is
// accepted; errors name the offending key path. See docs/config_schema.md.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "snnas/fitness.hpp"
#include "snnas/imc.hpp"
#include "snnas/quant.hpp"
#include "snnas/search.hpp"
#include "snnas/spike_engine.hpp"

namespace snnas {

inline constexpr int kConfigSchemaVersion = 1;

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  SearchProblem problem;
  std::string batch_path;
  std::string output_path;
  bool trace = false;
  int workers = 0;
};

namespace detail {

using nlohmann::json;

class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError("config: '" + label() + "' must be an object");
  }

  /// Rejects keys outside `allowed` and requires all of them.
  void expect_keys(std::initializer_list<const char*> allowed) const {
    std::set<std::string> known(allowed.begin(), allowed.end());
    for (const auto& [k, _] : j_.items())
      if (!known.count(k)) throw ConfigError("config: unknown key '" + key(k) + "'");
    for (const auto& k : known)
      if (!j_.contains(k)) throw ConfigError("config: missing key '" + key(k) + "'");
  }

  Reader child(const char* k) const { return Reader(j_.at(k), key(k)); }

  double number(const char* k) const {
    const auto& v = j_.at(k);
    if (!v.is_number()) throw ConfigError("config: '" + key(k) + "' must be a number");
    return v.get<double>();
  }

  double positive(const char* k) const {
    const double v = number(k);
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError("config: '" + key(k) + "' must be > 0");
    return v;
  }

  std::int64_t integer(const char* k) const {
    const auto& v = j_.at(k);
    if (!v.is_number_integer()) throw ConfigError("config: '" + key(k) + "' must be an integer");
    return v.get<std::int64_t>();
  }

  int positive_int(const char* k) const {
    const auto v = integer(k);
    if (v < 1 || v > std::numeric_limits<int>::max()) throw ConfigError("config: '" + key(k) + "' must be >= 1");
    return static_cast<int>(v);
  }

  /// A positive number or the string "inf".
  double budget(const char* k) const {
    const auto& v = j_.at(k);
    if (v.is_string() && v.get<std::string>() == "inf") return kUnbounded;
    if (!v.is_number()) throw ConfigError("config: '" + key(k) + "' must be a number or \"inf\"");
    const double d = v.get<double>();
    if (!(d > 0.0)) throw ConfigError("config: non-positive budget '" + key(k) + "'");
    return d;
  }

  bool boolean(const char* k) const {
    const auto& v = j_.at(k);
    if (!v.is_boolean()) throw ConfigError("config: '" + key(k) + "' must be true or false");
    return v.get<bool>();
  }

  std::string string(const char* k) const {
    const auto& v = j_.at(k);
    if (!v.is_string()) throw ConfigError("config: '" + key(k) + "' must be a string");
    return v.get<std::string>();
  }

  const json& raw(const char* k) const { return j_.at(k); }
  std::string key(const std::string& k) const { return path_.empty() ? k : path_ + "." + k; }

 private:
  std::string label() const { return path_.empty() ? "<root>" : path_; }
  const json& j_;
  std::string path_;
};

inline json budget_json(double v) { return std::isinf(v) ? json("inf") : json(v); }

}  // namespace detail

inline RunConfig parse_config(const nlohmann::json& root) {
  using detail::Reader;
  RunConfig cfg;
  auto& prob = cfg.problem;
  try {
    const Reader r(root, "");
    r.expect_keys({"schema_version", "constraints", "quant", "hw", "lif", "fitness", "network", "run_seed",
                   "batch_path", "output_path", "trace", "workers"});
    if (r.integer("schema_version") != kConfigSchemaVersion)
      throw ConfigError("config: unsupported schema_version (expected " + std::to_string(kConfigSchemaVersion) + ")");

    const Reader c = r.child("constraints");
    c.expect_keys({"mem_params_max", "area_mm2_max", "latency_ms_max", "energy_uj_max"});
    prob.constraints.mem_params_max = c.budget("mem_params_max");
    prob.constraints.area_mm2_max = c.budget("area_mm2_max");
    prob.constraints.latency_ms_max = c.budget("latency_ms_max");
    prob.constraints.energy_uj_max = c.budget("energy_uj_max");

    const Reader q = r.child("quant");
    q.expect_keys({"bit_w", "bit_d", "rounding", "frac_bits"});
    prob.quant.bit_w = static_cast<int>(q.integer("bit_w"));
    prob.quant.bit_d = static_cast<int>(q.integer("bit_d"));
    if (q.string("rounding") != "nearest_even") throw ConfigError("config: 'quant.rounding' must be \"nearest_even\"");
    if (!q.raw("frac_bits").is_null()) prob.quant.frac_bits_override = static_cast<int>(q.integer("frac_bits"));
    try {
      prob.quant.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("config: quant: ") + e.what());
    }

    const Reader h = r.child("hw");
    h.expect_keys({"xbar_size", "xbars_per_pe", "pes_per_tile", "mux_size", "adc_bits", "clock_hz", "noc_width_bits",
                   "buffers_kb", "vdd", "vread", "r_on_ohm", "r_off_ohm", "unit_costs"});
    auto& hw = prob.hw;
    hw.xbar_size = h.positive_int("xbar_size");
    hw.xbars_per_pe = h.positive_int("xbars_per_pe");
    hw.pes_per_tile = h.positive_int("pes_per_tile");
    hw.mux_size = h.positive_int("mux_size");
    hw.adc_bits = h.positive_int("adc_bits");
    hw.clock_hz = h.positive("clock_hz");
    hw.noc_width_bits = h.positive_int("noc_width_bits");
    hw.vdd = h.positive("vdd");
    hw.vread = h.positive("vread");
    hw.r_on_ohm = h.positive("r_on_ohm");
    hw.r_off_ohm = h.positive("r_off_ohm");
    const Reader b = h.child("buffers_kb");
    b.expect_keys({"gbuff", "tbuff", "pbuff", "tib", "pib"});
    hw.buffers = {b.positive("gbuff"), b.positive("tbuff"), b.positive("pbuff"), b.positive("tib"), b.positive("pib")};
    const Reader u = h.child("unit_costs");
    u.expect_keys({"a_xbar_mm2", "a_adc_mm2", "a_buf_mm2_per_kb", "a_neuron_module_mm2", "a_pool_module_mm2",
                   "a_noc_mm2", "e_xbar_row_j", "e_adc_j", "e_buf_bit_j", "e_noc_hop_j", "e_pool_op_j",
                   "t_xbar_read_cycles", "t_pool_op_cycles"});
    auto& uc = hw.units;
    uc.a_xbar_mm2 = u.positive("a_xbar_mm2");
    uc.a_adc_mm2 = u.positive("a_adc_mm2");
    uc.a_buf_mm2_per_kb = u.positive("a_buf_mm2_per_kb");
    uc.a_neuron_module_mm2 = u.positive("a_neuron_module_mm2");
    uc.a_pool_module_mm2 = u.positive("a_pool_module_mm2");
    uc.a_noc_mm2 = u.positive("a_noc_mm2");
    uc.e_xbar_row_j = u.positive("e_xbar_row_j");
    uc.e_adc_j = u.positive("e_adc_j");
    uc.e_buf_bit_j = u.positive("e_buf_bit_j");
    uc.e_noc_hop_j = u.positive("e_noc_hop_j");
    uc.e_pool_op_j = u.positive("e_pool_op_j");
    uc.t_xbar_read_cycles = u.positive("t_xbar_read_cycles");
    uc.t_pool_op_cycles = u.positive("t_pool_op_cycles");
    try {
      hw.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("config: hw: ") + e.what());
    }

    const Reader l = r.child("lif");
    l.expect_keys({"v_threshold", "v_reset", "leak", "timesteps"});
    prob.lif.v_threshold = l.number("v_threshold");
    prob.lif.v_reset = l.number("v_reset");
    prob.lif.leak = l.number("leak");
    prob.lif.timesteps = l.positive_int("timesteps");
    try {
      prob.lif.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("config: lif: ") + e.what());
    }

    const Reader f = r.child("fitness");
    f.expect_keys({"beta"});
    const auto& beta = f.raw("beta");
    if (beta.is_string() && beta.get<std::string>() == "auto") {
      prob.fitness.beta.reset();
    } else {
      prob.fitness.beta = f.positive("beta");
    }

    const Reader n = r.child("network");
    n.expect_keys({"base_channels", "num_classes"});
    prob.base_channels = n.positive_int("base_channels");
    prob.num_classes = n.positive_int("num_classes");
    if (prob.num_classes < 2) throw ConfigError("config: 'network.num_classes' must be >= 2");

    const auto seed = r.integer("run_seed");
    if (seed < 0) throw ConfigError("config: 'run_seed' must be >= 0");
    prob.run_seed = static_cast<std::uint64_t>(seed);
    cfg.batch_path = r.string("batch_path");
    cfg.output_path = r.string("output_path");
    cfg.trace = r.boolean("trace");
    const auto workers = r.integer("workers");
    if (workers < 0 || workers > 4096) throw ConfigError("config: 'workers' must be in 0..4096");
    cfg.workers = static_cast<int>(workers);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return cfg;
}

inline RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  nlohmann::json root;
  try {
    root = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config: parse error in " + path.string() + ": " + e.what());
  }
  return parse_config(root);
}

/// Serializes a config back to the file schema. With `runtime` false the
/// paths and worker count are left out (they do not affect results).
inline nlohmann::json config_to_json(const RunConfig& cfg, bool runtime = true) {
  using nlohmann::json;
  const auto& p = cfg.problem;
  const auto& hw = p.hw;
  const auto& u = hw.units;
  json j;
  j["schema_version"] = kConfigSchemaVersion;
  j["constraints"] = {{"mem_params_max", detail::budget_json(p.constraints.mem_params_max)},
                      {"area_mm2_max", detail::budget_json(p.constraints.area_mm2_max)},
                      {"latency_ms_max", detail::budget_json(p.constraints.latency_ms_max)},
                      {"energy_uj_max", detail::budget_json(p.constraints.energy_uj_max)}};
  j["quant"] = {{"bit_w", p.quant.bit_w},
                {"bit_d", p.quant.bit_d},
                {"rounding", "nearest_even"},
                {"frac_bits", p.quant.frac_bits_override ? json(*p.quant.frac_bits_override) : json(nullptr)}};
  j["hw"] = {{"xbar_size", hw.xbar_size},
             {"xbars_per_pe", hw.xbars_per_pe},
             {"pes_per_tile", hw.pes_per_tile},
             {"mux_size", hw.mux_size},
             {"adc_bits", hw.adc_bits},
             {"clock_hz", hw.clock_hz},
             {"noc_width_bits", hw.noc_width_bits},
             {"buffers_kb",
              {{"gbuff", hw.buffers.gbuff},
               {"tbuff", hw.buffers.tbuff},
               {"pbuff", hw.buffers.pbuff},
               {"tib", hw.buffers.tib},
               {"pib", hw.buffers.pib}}},
             {"vdd", hw.vdd},
             {"vread", hw.vread},
             {"r_on_ohm", hw.r_on_ohm},
             {"r_off_ohm", hw.r_off_ohm},
             {"unit_costs",
              {{"a_xbar_mm2", u.a_xbar_mm2},
               {"a_adc_mm2", u.a_adc_mm2},
               {"a_buf_mm2_per_kb", u.a_buf_mm2_per_kb},
               {"a_neuron_module_mm2", u.a_neuron_module_mm2},
               {"a_pool_module_mm2", u.a_pool_module_mm2},
               {"a_noc_mm2", u.a_noc_mm2},
               {"e_xbar_row_j", u.e_xbar_row_j},
               {"e_adc_j", u.e_adc_j},
               {"e_buf_bit_j", u.e_buf_bit_j},
               {"e_noc_hop_j", u.e_noc_hop_j},
               {"e_pool_op_j", u.e_pool_op_j},
               {"t_xbar_read_cycles", u.t_xbar_read_cycles},
               {"t_pool_op_cycles", u.t_pool_op_cycles}}}};
  j["lif"] = {{"v_threshold", p.lif.v_threshold},
              {"v_reset", p.lif.v_reset},
              {"leak", p.lif.leak},
              {"timesteps", p.lif.timesteps}};
  j["fitness"] = {{"beta", p.fitness.beta ? json(*p.fitness.beta) : json("auto")}};
  j["network"] = {{"base_channels", p.base_channels}, {"num_classes", p.num_classes}};
  j["run_seed"] = p.run_seed;
  j["trace"] = cfg.trace;
  if (runtime) {
    j["batch_path"] = cfg.batch_path;
    j["output_path"] = cfg.output_path;
    j["workers"] = cfg.workers;
  }
  return j;
}

}  // namespace snnas
