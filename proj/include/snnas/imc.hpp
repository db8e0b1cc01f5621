#pragma once

// Crossbar mapping and analytic area / latency / energy model for an RRAM
// in-memory-computing accelerator (tiles -> PEs -> crossbars).
//
// Mapping: each kernel position gets its own crossbar set; input channels run
// down the rows (r = ceil(D/X) row splits); each filter occupies
// ceil(bit_w/bit_d) adjacent columns, so floor(X/cols) filters share a
// crossbar (c = ceil(F/filters_per_xbar) column splits). A tile only ever
// holds crossbars of one layer.

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "snnas/arch.hpp"
#include "snnas/quant.hpp"
#include "snnas/spike_engine.hpp"

namespace snnas {

struct BufferSizesKb {
  double gbuff = 20;
  double tbuff = 10;
  double pbuff = 5;
  double tib = 50;
  double pib = 30;
  friend bool operator==(const BufferSizesKb&, const BufferSizesKb&) = default;
};

/// Calibratable per-unit costs. Defaults are placeholders, not measured values.
struct UnitCosts {
  double a_xbar_mm2 = 5e-4;
  double a_adc_mm2 = 1.2e-3;
  double a_buf_mm2_per_kb = 1e-2;
  double a_neuron_module_mm2 = 0.5;
  double a_pool_module_mm2 = 0.1;
  double a_noc_mm2 = 0.8;
  double e_xbar_row_j = 2e-12;
  double e_adc_j = 1e-12;
  double e_buf_bit_j = 1e-13;
  double e_noc_hop_j = 1e-12;
  double e_pool_op_j = 5e-14;
  double t_xbar_read_cycles = 10;
  double t_pool_op_cycles = 1;
  friend bool operator==(const UnitCosts&, const UnitCosts&) = default;
};

struct HardwareConfig {
  int xbar_size = 64;
  int xbars_per_pe = 9;
  int pes_per_tile = 8;
  int mux_size = 8;
  int adc_bits = 4;
  double clock_hz = 250e6;
  int noc_width_bits = 32;
  BufferSizesKb buffers;
  double vdd = 0.9;
  double vread = 0.1;
  double r_on_ohm = 20e3;
  double r_off_ohm = 200e3;
  UnitCosts units;

  void validate() const {
    auto positive = [](double v, const char* name) {
      if (!(v > 0.0) || !std::isfinite(v)) throw std::invalid_argument(std::string(name) + " must be > 0");
    };
    positive(xbar_size, "xbar_size");
    positive(xbars_per_pe, "xbars_per_pe");
    positive(pes_per_tile, "pes_per_tile");
    positive(mux_size, "mux_size");
    positive(adc_bits, "adc_bits");
    positive(clock_hz, "clock_hz");
    positive(noc_width_bits, "noc_width_bits");
    positive(buffers.gbuff, "gbuff_kb");
    positive(buffers.tbuff, "tbuff_kb");
    positive(buffers.pbuff, "pbuff_kb");
    positive(buffers.tib, "tib_kb");
    positive(buffers.pib, "pib_kb");
    positive(vdd, "vdd");
    positive(vread, "vread");
    positive(r_on_ohm, "r_on_ohm");
    positive(r_off_ohm, "r_off_ohm");
    positive(units.a_xbar_mm2, "a_xbar_mm2");
    positive(units.a_adc_mm2, "a_adc_mm2");
    positive(units.a_buf_mm2_per_kb, "a_buf_mm2_per_kb");
    positive(units.a_neuron_module_mm2, "a_neuron_module_mm2");
    positive(units.a_pool_module_mm2, "a_pool_module_mm2");
    positive(units.a_noc_mm2, "a_noc_mm2");
    positive(units.e_xbar_row_j, "e_xbar_row_j");
    positive(units.e_adc_j, "e_adc_j");
    positive(units.e_buf_bit_j, "e_buf_bit_j");
    positive(units.e_noc_hop_j, "e_noc_hop_j");
    positive(units.e_pool_op_j, "e_pool_op_j");
    positive(units.t_xbar_read_cycles, "t_xbar_read_cycles");
    positive(units.t_pool_op_cycles, "t_pool_op_cycles");
    if (xbar_size % mux_size != 0) throw std::invalid_argument("mux_size must divide xbar_size");
    if (vread > vdd) throw std::invalid_argument("vread exceeds vdd");
    if (r_off_ohm <= r_on_ohm) throw std::invalid_argument("r_off_ohm must exceed r_on_ohm");
  }

  /// ADCs per crossbar (columns share an ADC through the multiplexer).
  int adcs_per_xbar() const { return xbar_size / mux_size; }

  friend bool operator==(const HardwareConfig&, const HardwareConfig&) = default;
};

struct LayerMapping {
  std::int64_t n_xbars = 0;
  std::int64_t n_pes = 0;
  std::int64_t n_tiles = 0;
  std::int64_t row_splits = 0;
  std::int64_t col_splits = 0;
  int cols_per_filter = 0;
  std::int64_t filters_per_xbar = 0;

  /// Device columns holding weights, summed over all crossbars.
  std::int64_t occupied_columns(const LayerSpec& layer) const {
    const std::int64_t p = layer.kind == LayerKind::FullyConnected ? 1 : layer.kernel;
    return p * p * row_splits * layer.out_channels * cols_per_filter;
  }

  friend bool operator==(const LayerMapping&, const LayerMapping&) = default;
};

struct MappingPlan {
  std::vector<LayerMapping> layers;  // parallel to NetworkArch::layers

  std::int64_t total_xbars() const {
    std::int64_t n = 0;
    for (const auto& m : layers) n += m.n_xbars;
    return n;
  }
  std::int64_t total_tiles() const {
    std::int64_t n = 0;
    for (const auto& m : layers) n += m.n_tiles;
    return n;
  }
};

class MappingError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline std::int64_t ceil_div(std::int64_t a, std::int64_t b) { return (a + b - 1) / b; }

inline LayerMapping map_layer(const LayerSpec& layer, const HardwareConfig& hw, int cols_per_filter) {
  if (layer.kind == LayerKind::AvgPool) return {};
  if (cols_per_filter < 1) throw std::invalid_argument("cols_per_filter must be >= 1");
  LayerMapping m;
  m.cols_per_filter = cols_per_filter;
  m.filters_per_xbar = hw.xbar_size / cols_per_filter;
  if (m.filters_per_xbar == 0) throw MappingError("weight word exceeds crossbar width");
  m.col_splits = ceil_div(layer.out_channels, m.filters_per_xbar);
  m.row_splits = ceil_div(layer.in_channels, hw.xbar_size);
  const std::int64_t p = layer.kind == LayerKind::FullyConnected ? 1 : layer.kernel;
  m.n_xbars = p * p * m.row_splits * m.col_splits;
  m.n_pes = ceil_div(m.n_xbars, hw.xbars_per_pe);
  m.n_tiles = ceil_div(m.n_pes, hw.pes_per_tile);
  return m;
}

inline LayerMapping map_layer(const LayerSpec& layer, const HardwareConfig& hw, const QuantSpec& spec) {
  return map_layer(layer, hw, adjustment_factor(spec));
}

inline MappingPlan map_network(const NetworkArch& arch, const HardwareConfig& hw, const QuantSpec& spec) {
  MappingPlan plan;
  plan.layers.reserve(arch.layers.size());
  for (const auto& l : arch.layers) plan.layers.push_back(map_layer(l, hw, spec));
  return plan;
}

// ---- area -------------------------------------------------------------------

inline double tile_area_mm2(const HardwareConfig& hw) {
  const auto& u = hw.units;
  const double xbar = u.a_xbar_mm2 + hw.adcs_per_xbar() * u.a_adc_mm2;
  const double pe = hw.xbars_per_pe * xbar + (hw.buffers.pbuff + hw.buffers.pib) * u.a_buf_mm2_per_kb;
  return hw.pes_per_tile * pe + (hw.buffers.tbuff + hw.buffers.tib) * u.a_buf_mm2_per_kb;
}

/// GBuff, neuron module, pooling module and NoC.
inline double global_area_mm2(const HardwareConfig& hw) {
  const auto& u = hw.units;
  return hw.buffers.gbuff * u.a_buf_mm2_per_kb + u.a_neuron_module_mm2 + u.a_pool_module_mm2 + u.a_noc_mm2;
}

inline double area(const MappingPlan& plan, const HardwareConfig& hw) {
  return static_cast<double>(plan.total_tiles()) * tile_area_mm2(hw) + global_area_mm2(hw);
}

// ---- latency ----------------------------------------------------------------

/// Crossbar (or pooling) activations of one layer for one inference: H_out^2 * T.
inline double layer_activations(const LayerSpec& layer, int timesteps) {
  const double h = layer.out_spatial();
  return h * h * timesteps;
}

inline double layer_cycles(const LayerSpec& layer, const LayerMapping& m, const HardwareConfig& hw,
                           int timesteps) {
  const double act = layer_activations(layer, timesteps);
  if (layer.kind == LayerKind::AvgPool) return act * hw.units.t_pool_op_cycles;
  if (m.n_xbars == 0) return 0.0;
  // Row and column splits run in parallel; the ADC is time-multiplexed.
  return act * hw.units.t_xbar_read_cycles * hw.adcs_per_xbar();
}

inline double latency(const MappingPlan& plan, const NetworkArch& arch, const HardwareConfig& hw,
                      const LifParams& lif) {
  double cycles = 0.0;
  for (std::size_t l = 0; l < arch.layers.size(); ++l)
    cycles += layer_cycles(arch.layers[l], plan.layers[l], hw, lif.timesteps);
  return cycles / hw.clock_hz * 1e3;
}

// ---- energy -----------------------------------------------------------------

struct EnergyTerms {
  double xbar_uj = 0;
  double adc_uj = 0;
  double buffer_uj = 0;
  double noc_uj = 0;
  double pool_uj = 0;
  double total() const { return xbar_uj + adc_uj + buffer_uj + noc_uj + pool_uj; }
};

inline EnergyTerms layer_energy(const LayerSpec& layer, const LayerMapping& m, const HardwareConfig& hw,
                                const QuantSpec& spec, int timesteps, double sparsity) {
  if (!(sparsity >= 0.0 && sparsity <= 1.0)) throw std::invalid_argument("sparsity must be in [0, 1]");
  const auto& u = hw.units;
  const double act = layer_activations(layer, timesteps);
  EnergyTerms e;
  if (layer.kind == LayerKind::AvgPool) {
    e.pool_uj = act * layer.out_channels * u.e_pool_op_j * 1e6;
    return e;
  }
  const double xbars = static_cast<double>(m.n_xbars);
  const double rows_active = static_cast<double>(ceil_div(layer.in_channels, m.row_splits));
  const double p2 = layer.kind == LayerKind::FullyConnected ? 1.0 : double(layer.kernel) * layer.kernel;
  e.xbar_uj = act * sparsity * rows_active * u.e_xbar_row_j * xbars * 1e6;
  e.adc_uj = act * hw.adcs_per_xbar() * u.e_adc_j * xbars * 1e6;
  const double in_bits = p2 * layer.in_channels;  // spikes are 1 bit
  const double out_bits = static_cast<double>(m.occupied_columns(layer)) * hw.adc_bits;
  e.buffer_uj = act * (in_bits + out_bits) * u.e_buf_bit_j * 1e6;
  const double flits = static_cast<double>(ceil_div(std::int64_t{layer.out_channels} * spec.bit_w, hw.noc_width_bits));
  const double hops = std::ceil(std::sqrt(static_cast<double>(m.n_tiles)));
  e.noc_uj = act * flits * hops * u.e_noc_hop_j * 1e6;
  return e;
}

inline double energy(const MappingPlan& plan, const NetworkArch& arch, const HardwareConfig& hw,
                     const QuantSpec& spec, const LifParams& lif, std::span<const double> sparsity) {
  if (sparsity.size() != arch.layers.size()) throw std::invalid_argument("one sparsity value per layer expected");
  double total = 0.0;
  for (std::size_t l = 0; l < arch.layers.size(); ++l)
    total += layer_energy(arch.layers[l], plan.layers[l], hw, spec, lif.timesteps, sparsity[l]).total();
  return total;
}

// ---- report -----------------------------------------------------------------

struct LayerCost {
  LayerSpec layer;
  LayerMapping mapping;
  std::int64_t params = 0;
  double sparsity = 0;
  double area_mm2 = 0;
  double cycles = 0;
  double latency_ms = 0;
  EnergyTerms energy;
};

struct CostReport {
  std::int64_t mem_params = 0;
  double area_mm2 = 0;
  double latency_ms = 0;
  double energy_uj = 0;
  double global_area_mm2 = 0;
  std::int64_t total_xbars = 0;
  std::int64_t total_tiles = 0;
  std::vector<LayerCost> layers;
};

inline CostReport evaluate_costs(const NetworkArch& arch, const HardwareConfig& hw, const QuantSpec& spec,
                                 const LifParams& lif, std::span<const double> sparsity) {
  hw.validate();
  spec.validate();
  if (sparsity.size() != arch.layers.size()) throw std::invalid_argument("one sparsity value per layer expected");
  const MappingPlan plan = map_network(arch, hw, spec);
  const double a_tile = tile_area_mm2(hw);

  CostReport r;
  r.mem_params = param_count(arch);
  r.global_area_mm2 = global_area_mm2(hw);
  r.area_mm2 = area(plan, hw);
  r.latency_ms = latency(plan, arch, hw, lif);
  r.total_xbars = plan.total_xbars();
  r.total_tiles = plan.total_tiles();
  for (std::size_t l = 0; l < arch.layers.size(); ++l) {
    const auto& layer = arch.layers[l];
    LayerCost c;
    c.layer = layer;
    c.mapping = plan.layers[l];
    c.params = layer.param_count();
    c.sparsity = sparsity[l];
    c.area_mm2 = static_cast<double>(c.mapping.n_tiles) * a_tile;
    c.cycles = layer_cycles(layer, c.mapping, hw, lif.timesteps);
    c.latency_ms = c.cycles / hw.clock_hz * 1e3;
    c.energy = layer_energy(layer, c.mapping, hw, spec, lif.timesteps, sparsity[l]);
    r.energy_uj += c.energy.total();
    r.layers.push_back(c);
  }
  return r;
}

}  // namespace snnas
