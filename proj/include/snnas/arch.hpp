#pragma once

// Cell-based search space and the macro-architecture that expands two cells
// into a concrete layer list.

#include <array>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace snnas {

enum class Operation : std::uint8_t { SkipCon = 0, Conv3x3 = 1, AvgPool3x3 = 2 };

inline constexpr int kNumOperations = 3;
inline constexpr int kCellEdges = 6;
inline constexpr int kCellNodes = 4;
inline constexpr int kNumCells = 729;  // 3^6

inline const char* to_string(Operation op) {
  switch (op) {
    case Operation::SkipCon: return "SkipCon";
    case Operation::Conv3x3: return "Conv3x3";
    case Operation::AvgPool3x3: return "AvgPool3x3";
  }
  return "?";
}

/// One neural cell: a 4-node DAG with an operation on every edge i->j (i<j).
/// Edge order is c01, c02, c03, c12, c13, c23.
struct CellConfig {
  std::array<Operation, kCellEdges> edges{};

  static constexpr std::array<std::pair<int, int>, kCellEdges> kEdgeNodes{
      {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}}};

  /// Position in lexicographic enumeration order (c23 varies fastest).
  int index() const {
    int idx = 0;
    for (Operation op : edges) idx = idx * kNumOperations + static_cast<int>(op);
    return idx;
  }

  static CellConfig from_index(int idx) {
    if (idx < 0 || idx >= kNumCells) throw std::out_of_range("cell index out of range");
    CellConfig cfg;
    for (int e = kCellEdges - 1; e >= 0; --e) {
      cfg.edges[e] = static_cast<Operation>(idx % kNumOperations);
      idx /= kNumOperations;
    }
    return cfg;
  }

  static CellConfig from_codes(const std::array<int, kCellEdges>& codes) {
    CellConfig cfg;
    for (int e = 0; e < kCellEdges; ++e) {
      if (codes[e] < 0 || codes[e] >= kNumOperations)
        throw std::invalid_argument("operation code must be 0, 1 or 2, got " +
                                    std::to_string(codes[e]));
      cfg.edges[e] = static_cast<Operation>(codes[e]);
    }
    return cfg;
  }

  std::array<int, kCellEdges> codes() const {
    std::array<int, kCellEdges> out{};
    for (int e = 0; e < kCellEdges; ++e) out[e] = static_cast<int>(edges[e]);
    return out;
  }

  std::string str() const {
    std::string s;
    for (int e = 0; e < kCellEdges; ++e) {
      if (e) s += ',';
      s += std::to_string(static_cast<int>(edges[e]));
    }
    return s;
  }

  friend bool operator==(const CellConfig&, const CellConfig&) = default;
};

enum class LayerKind : std::uint8_t { Conv, AvgPool, FullyConnected };

inline const char* to_string(LayerKind k) {
  switch (k) {
    case LayerKind::Conv: return "Conv";
    case LayerKind::AvgPool: return "AvgPool";
    case LayerKind::FullyConnected: return "FullyConnected";
  }
  return "?";
}

/// A concrete layer. Spatial maps are square. `input_node`/`output_node` name
/// values in the network graph; a node's value is the sum of every layer and
/// skip edge writing to it.
struct LayerSpec {
  LayerKind kind = LayerKind::Conv;
  int kernel = 1;
  int in_channels = 1;
  int out_channels = 1;
  int in_spatial = 1;
  int stride = 1;
  int pad = 0;
  bool has_lif = false;
  int input_node = 0;
  int output_node = 0;

  int out_spatial() const {
    if (kind == LayerKind::FullyConnected) return 1;
    return (in_spatial + 2 * pad - kernel) / stride + 1;
  }

  std::int64_t param_count() const {
    switch (kind) {
      case LayerKind::Conv:
        return std::int64_t{kernel} * kernel * in_channels * out_channels;
      case LayerKind::FullyConnected:
        return std::int64_t{in_channels} * out_channels;
      case LayerKind::AvgPool:
        return 0;
    }
    return 0;
  }

  /// Inputs feeding one output neuron (P*P*D for Conv, D for FC).
  int fan_in() const {
    return kind == LayerKind::FullyConnected ? in_channels : kernel * kernel * in_channels;
  }

  /// Output neurons for one sample.
  std::int64_t neurons() const {
    const std::int64_t h = out_spatial();
    return h * h * out_channels;
  }

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

struct SkipEdge {
  int from = 0;
  int to = 0;
  friend bool operator==(const SkipEdge&, const SkipEdge&) = default;
};

struct InputShape {
  int channels = 3;
  int height = 32;
  int width = 32;
  friend bool operator==(const InputShape&, const InputShape&) = default;
};

struct NetworkArch {
  CellConfig cell_a;
  CellConfig cell_b;
  int base_channels = 64;
  int num_classes = 10;
  InputShape input;
  std::vector<LayerSpec> layers;
  std::vector<SkipEdge> skips;
  int num_nodes = 1;  // node 0 is the network input

  friend bool operator==(const NetworkArch&, const NetworkArch&) = default;
};

/// All 729 cells in lexicographic order over (c01,c02,c03,c12,c13,c23).
inline std::vector<CellConfig> enumerate_cells() {
  std::vector<CellConfig> cells;
  cells.reserve(kNumCells);
  for (int i = 0; i < kNumCells; ++i) cells.push_back(CellConfig::from_index(i));
  return cells;
}

namespace detail {

inline LayerSpec conv3x3(int in_c, int out_c, int spatial, int stride, int in_node, int out_node) {
  return LayerSpec{LayerKind::Conv, 3, in_c, out_c, spatial, stride, 1, true, in_node, out_node};
}

// Expands a cell whose node 0 is `base_node`; nodes 1..3 get base_node+1..+3.
inline void expand_cell(const CellConfig& cfg, int channels, int spatial, int base_node,
                        std::vector<LayerSpec>& layers, std::vector<SkipEdge>& skips) {
  for (int e = 0; e < kCellEdges; ++e) {
    const auto [from, to] = CellConfig::kEdgeNodes[e];
    const int src = base_node + from;
    const int dst = base_node + to;
    switch (cfg.edges[e]) {
      case Operation::SkipCon:
        skips.push_back({src, dst});
        break;
      case Operation::Conv3x3:
        layers.push_back(conv3x3(channels, channels, spatial, 1, src, dst));
        break;
      case Operation::AvgPool3x3:
        layers.push_back(LayerSpec{LayerKind::AvgPool, 3, channels, channels, spatial, 1, 1,
                                   false, src, dst});
        break;
    }
  }
}

}  // namespace detail

/// Layers of one cell in isolation (cell input is node 0, output node 3).
inline std::vector<LayerSpec> build_cell(const CellConfig& cfg, int channels, int spatial) {
  if (channels < 1) throw std::invalid_argument("cell channels must be >= 1");
  if (spatial < 3) throw std::invalid_argument("cell spatial size must be >= 3");
  std::vector<LayerSpec> layers;
  std::vector<SkipEdge> skips;
  detail::expand_cell(cfg, channels, spatial, 0, layers, skips);
  return layers;
}

/// Stem -> Cell-A (C) -> stride-2 reduction (2C) -> Cell-B (2C) -> stride-2
/// reduction (4C) -> global average pool -> classifier.
inline NetworkArch build_network(const CellConfig& cell_a, const CellConfig& cell_b,
                                 const InputShape& input, int base_channels, int num_classes) {
  if (input.height != input.width) throw std::invalid_argument("input must be square");
  if (input.height < 8) throw std::invalid_argument("input spatial size must be >= 8");
  if (input.channels < 1) throw std::invalid_argument("input channels must be >= 1");
  if (base_channels < 1) throw std::invalid_argument("base_channels must be >= 1");
  if (num_classes < 2) throw std::invalid_argument("num_classes must be >= 2");

  NetworkArch net;
  net.cell_a = cell_a;
  net.cell_b = cell_b;
  net.base_channels = base_channels;
  net.num_classes = num_classes;
  net.input = input;

  const int c = base_channels;
  int spatial = input.height;
  auto& layers = net.layers;

  layers.push_back(detail::conv3x3(input.channels, c, spatial, 1, 0, 1));
  detail::expand_cell(cell_a, c, spatial, 1, layers, net.skips);  // nodes 1..4

  layers.push_back(detail::conv3x3(c, 2 * c, spatial, 2, 4, 5));
  spatial = layers.back().out_spatial();
  detail::expand_cell(cell_b, 2 * c, spatial, 5, layers, net.skips);  // nodes 5..8

  layers.push_back(detail::conv3x3(2 * c, 4 * c, spatial, 2, 8, 9));
  spatial = layers.back().out_spatial();

  layers.push_back(LayerSpec{LayerKind::AvgPool, spatial, 4 * c, 4 * c, spatial, 1, 0, false, 9, 10});
  layers.push_back(LayerSpec{LayerKind::FullyConnected, 1, 4 * c, num_classes, 1, 1, 0, false, 10, 11});
  net.num_nodes = 12;
  return net;
}

inline std::int64_t param_count(const std::vector<LayerSpec>& layers) {
  std::int64_t total = 0;
  for (const auto& l : layers) total += l.param_count();
  return total;
}

inline std::int64_t param_count(const NetworkArch& arch) { return param_count(arch.layers); }

}  // namespace snnas
