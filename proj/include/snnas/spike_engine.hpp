#pragma once

// LIF forward simulation over T timesteps with direct input coding. Records,
// for every LIF layer, which neurons spiked at least once per sample.

#include <Eigen/Core>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "snnas/arch.hpp"
#include "snnas/batch.hpp"
#include "snnas/rng.hpp"

namespace snnas {

struct LifParams {
  double v_threshold = 1.0;
  double v_reset = 0.0;
  double leak = 0.75;
  int timesteps = 4;

  void validate() const {
    if (!(v_threshold > v_reset)) throw std::invalid_argument("v_threshold must exceed v_reset");
    if (!(leak > 0.0 && leak <= 1.0)) throw std::invalid_argument("leak must be in (0, 1]");
    if (timesteps < 1) throw std::invalid_argument("timesteps must be >= 1");
  }

  friend bool operator==(const LifParams&, const LifParams&) = default;
};

/// Row-major bit matrix; one row per sample, one bit per neuron.
class BitMatrix {
 public:
  BitMatrix() = default;
  BitMatrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), words_((cols + 63) / 64), bits_(rows * words_, 0) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  bool get(std::size_t r, std::size_t c) const { return (bits_[r * words_ + c / 64] >> (c % 64)) & 1u; }
  void set(std::size_t r, std::size_t c, bool v = true) {
    auto& w = bits_[r * words_ + c / 64];
    const std::uint64_t mask = std::uint64_t{1} << (c % 64);
    w = v ? (w | mask) : (w & ~mask);
  }

  std::size_t hamming(std::size_t i, std::size_t j) const {
    std::size_t d = 0;
    const std::uint64_t* a = &bits_[i * words_];
    const std::uint64_t* b = &bits_[j * words_];
    for (std::size_t w = 0; w < words_; ++w) d += static_cast<std::size_t>(std::popcount(a[w] ^ b[w]));
    return d;
  }

  std::size_t count() const {
    std::size_t n = 0;
    for (auto w : bits_) n += static_cast<std::size_t>(std::popcount(w));
    return n;
  }

  double mean() const {
    return rows_ * cols_ == 0 ? 0.0 : static_cast<double>(count()) / static_cast<double>(rows_ * cols_);
  }

  friend bool operator==(const BitMatrix&, const BitMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::size_t words_ = 0;
  std::vector<std::uint64_t> bits_;
};

struct LayerActivity {
  int layer_index = 0;  // index into NetworkArch::layers
  BitMatrix spikes;     // S x N_l
};

struct ActivityRecord {
  std::vector<LayerActivity> lif_layers;
  // Per entry of NetworkArch::layers: fraction of nonzero input elements seen
  // by that layer, averaged over samples and timesteps.
  std::vector<double> input_rate;
};

using LayerWeights = std::vector<double>;  // [F][D][P][P] (FC: [F][D]); empty for pooling

/// One LIF update: u = leak*v + I; spike where u >= threshold; hard reset.
template <typename T>
void lif_step_inplace(std::span<T> v, std::span<const T> current, std::span<T> spikes, const LifParams& p) {
  const T leak = static_cast<T>(p.leak);
  const T th = static_cast<T>(p.v_threshold);
  const T reset = static_cast<T>(p.v_reset);
  for (std::size_t i = 0; i < v.size(); ++i) {
    const T u = leak * v[i] + current[i];
    const bool fire = u >= th;
    spikes[i] = fire ? T{1} : T{0};
    v[i] = fire ? reset : u;
  }
}

template <typename T>
std::pair<std::vector<T>, std::vector<T>> lif_step(std::span<const T> v, std::span<const T> current,
                                                   const LifParams& p) {
  if (v.size() != current.size()) throw std::invalid_argument("membrane and current shapes differ");
  std::vector<T> next(v.begin(), v.end());
  std::vector<T> spikes(v.size());
  lif_step_inplace<T>(next, current, spikes, p);
  return {std::move(next), std::move(spikes)};
}

/// Uniform in [-sqrt(1/fan_in), +sqrt(1/fan_in)] per layer, drawn in layer order.
inline std::vector<LayerWeights> init_weights(const NetworkArch& arch, std::uint64_t seed) {
  std::mt19937_64 gen(splitmix64(seed));
  std::vector<LayerWeights> weights;
  weights.reserve(arch.layers.size());
  for (const auto& layer : arch.layers) {
    LayerWeights w(static_cast<std::size_t>(layer.param_count()));
    const double bound = std::sqrt(1.0 / layer.fan_in());
    for (double& x : w) x = (2.0 * uniform01(gen) - 1.0) * bound;
    weights.push_back(std::move(w));
  }
  return weights;
}

namespace detail {

using Mat = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Activations are stored channel-major: rows = channels, cols = S*H*W.
inline Mat im2col(const Mat& in, int samples, int spatial, int kernel, int stride, int pad) {
  const int out_sp = (spatial + 2 * pad - kernel) / stride + 1;
  const Eigen::Index plane = static_cast<Eigen::Index>(out_sp) * out_sp;
  const Eigen::Index in_plane = static_cast<Eigen::Index>(spatial) * spatial;
  Mat col = Mat::Zero(in.rows() * kernel * kernel, samples * plane);
  for (Eigen::Index d = 0; d < in.rows(); ++d) {
    const float* src = in.row(d).data();
    for (int ky = 0; ky < kernel; ++ky) {
      for (int kx = 0; kx < kernel; ++kx) {
        float* dst = col.row((d * kernel + ky) * kernel + kx).data();
        for (int s = 0; s < samples; ++s) {
          const float* img = src + s * in_plane;
          float* out = dst + s * plane;
          for (int oy = 0; oy < out_sp; ++oy) {
            const int iy = oy * stride - pad + ky;
            if (iy < 0 || iy >= spatial) continue;
            const float* row = img + static_cast<Eigen::Index>(iy) * spatial;
            float* orow = out + static_cast<Eigen::Index>(oy) * out_sp;
            for (int ox = 0; ox < out_sp; ++ox) {
              const int ix = ox * stride - pad + kx;
              if (ix >= 0 && ix < spatial) orow[ox] = row[ix];
            }
          }
        }
      }
    }
  }
  return col;
}

inline Mat avg_pool(const Mat& in, int samples, int spatial, int kernel, int stride, int pad) {
  const int out_sp = (spatial + 2 * pad - kernel) / stride + 1;
  const Eigen::Index plane = static_cast<Eigen::Index>(out_sp) * out_sp;
  const Eigen::Index in_plane = static_cast<Eigen::Index>(spatial) * spatial;
  const float inv = 1.0f / static_cast<float>(kernel * kernel);
  Mat out(in.rows(), samples * plane);
  for (Eigen::Index c = 0; c < in.rows(); ++c) {
    for (int s = 0; s < samples; ++s) {
      const float* img = in.row(c).data() + s * in_plane;
      float* o = out.row(c).data() + s * plane;
      for (int oy = 0; oy < out_sp; ++oy) {
        for (int ox = 0; ox < out_sp; ++ox) {
          float acc = 0.0f;
          for (int ky = 0; ky < kernel; ++ky) {
            const int iy = oy * stride - pad + ky;
            if (iy < 0 || iy >= spatial) continue;
            for (int kx = 0; kx < kernel; ++kx) {
              const int ix = ox * stride - pad + kx;
              if (ix >= 0 && ix < spatial) acc += img[iy * spatial + ix];
            }
          }
          o[oy * out_sp + ox] = acc * inv;
        }
      }
    }
  }
  return out;
}

inline Mat weight_matrix(const LayerSpec& layer, const LayerWeights& w) {
  Mat m(layer.out_channels, layer.fan_in());
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<float>(w[static_cast<std::size_t>(i)]);
  return m;
}

}  // namespace detail

/// Runs the network for T timesteps on all samples at once. Membrane state
/// persists across timesteps; samples never share state.
inline ActivityRecord forward(const NetworkArch& arch, std::span<const LayerWeights> weights,
                              const Batch& batch, const LifParams& p) {
  using detail::Mat;
  p.validate();
  if (batch.samples < 2) throw std::invalid_argument("forward needs S >= 2 samples");
  if (static_cast<int>(batch.channels) != arch.input.channels ||
      static_cast<int>(batch.height) != arch.input.height || static_cast<int>(batch.width) != arch.input.width)
    throw std::invalid_argument("batch shape does not match network input");
  if (weights.size() != arch.layers.size())
    throw std::invalid_argument("expected weights for " + std::to_string(arch.layers.size()) + " layers, got " +
                                std::to_string(weights.size()));

  const int S = static_cast<int>(batch.samples);
  const std::size_t L = arch.layers.size();

  std::vector<Mat> wmats(L);
  for (std::size_t l = 0; l < L; ++l) {
    const auto& layer = arch.layers[l];
    if (weights[l].size() != static_cast<std::size_t>(layer.param_count()))
      throw std::invalid_argument("weight shape mismatch at layer " + std::to_string(l) + " (" +
                                  to_string(layer.kind) + "): expected " + std::to_string(layer.param_count()) +
                                  " values, got " + std::to_string(weights[l].size()));
    if (layer.kind != LayerKind::AvgPool) wmats[l] = detail::weight_matrix(layer, weights[l]);
  }

  // Node 0: the image, channel-major.
  const int in_sp = arch.input.height;
  const Eigen::Index in_plane = static_cast<Eigen::Index>(in_sp) * in_sp;
  Mat image(arch.input.channels, S * in_plane);
  for (int s = 0; s < S; ++s)
    for (int c = 0; c < arch.input.channels; ++c)
      for (Eigen::Index i = 0; i < in_plane; ++i)
        image(c, s * in_plane + i) = batch.sample(s)[c * in_plane + i];

  std::vector<int> node_spatial(arch.num_nodes, 0);
  node_spatial[0] = in_sp;
  std::vector<std::vector<std::size_t>> layers_into(arch.num_nodes);
  std::vector<std::vector<int>> skips_into(arch.num_nodes);
  for (std::size_t l = 0; l < L; ++l) {
    layers_into[arch.layers[l].output_node].push_back(l);
    node_spatial[arch.layers[l].output_node] = arch.layers[l].out_spatial();
  }
  for (const auto& e : arch.skips) {
    skips_into[e.to].push_back(e.from);
    node_spatial[e.to] = node_spatial[e.from];
  }

  std::vector<Mat> membrane(L);
  std::vector<std::vector<std::uint8_t>> fired(L);
  for (std::size_t l = 0; l < L; ++l) {
    const auto& layer = arch.layers[l];
    if (!layer.has_lif) continue;
    const Eigen::Index n = static_cast<Eigen::Index>(S) * layer.out_spatial() * layer.out_spatial();
    membrane[l] = Mat::Constant(layer.out_channels, n, static_cast<float>(p.v_reset));
    fired[l].assign(static_cast<std::size_t>(layer.out_channels * n), 0);
  }

  std::vector<double> nnz(L, 0.0);
  std::vector<double> total(L, 0.0);
  std::vector<Mat> const_current(L);  // layers reading node 0 see the same input every step
  std::vector<Mat> nodes(arch.num_nodes);
  nodes[0] = image;

  for (int t = 0; t < p.timesteps; ++t) {
    std::map<std::pair<int, int>, Mat> col_cache;  // (node, stride) -> im2col
    for (int v = 1; v < arch.num_nodes; ++v) {
      Mat acc;
      auto accumulate = [&acc](const Mat& x) {
        if (acc.size() == 0) acc = x;
        else acc += x;
      };
      for (int from : skips_into[v]) accumulate(nodes[from]);

      for (std::size_t l : layers_into[v]) {
        const auto& layer = arch.layers[l];
        const Mat& in = nodes[layer.input_node];
        nnz[l] += static_cast<double>((in.array() != 0.0f).count());
        total[l] += static_cast<double>(in.size());
        const int sp = node_spatial[layer.input_node];

        Mat out;
        switch (layer.kind) {
          case LayerKind::Conv: {
            if (layer.input_node == 0 && const_current[l].size() != 0) {
              out = const_current[l];
              break;
            }
            const auto key = std::make_pair(layer.input_node, layer.stride);
            auto it = col_cache.find(key);
            if (it == col_cache.end())
              it = col_cache.emplace(key, detail::im2col(in, S, sp, layer.kernel, layer.stride, layer.pad)).first;
            out.noalias() = wmats[l] * it->second;
            if (layer.input_node == 0) const_current[l] = out;
            break;
          }
          case LayerKind::AvgPool:
            out = detail::avg_pool(in, S, sp, layer.kernel, layer.stride, layer.pad);
            break;
          case LayerKind::FullyConnected:
            out.noalias() = wmats[l] * in;
            break;
        }

        if (layer.has_lif) {
          Mat spikes(out.rows(), out.cols());
          lif_step_inplace<float>(std::span<float>(membrane[l].data(), static_cast<std::size_t>(membrane[l].size())),
                                  std::span<const float>(out.data(), static_cast<std::size_t>(out.size())),
                                  std::span<float>(spikes.data(), static_cast<std::size_t>(spikes.size())), p);
          auto& f = fired[l];
          for (Eigen::Index i = 0; i < spikes.size(); ++i) f[static_cast<std::size_t>(i)] |= spikes.data()[i] != 0.0f;
          accumulate(spikes);
        } else {
          accumulate(out);
        }
      }
      nodes[v] = std::move(acc);
    }
  }

  ActivityRecord rec;
  rec.input_rate.resize(L);
  for (std::size_t l = 0; l < L; ++l) rec.input_rate[l] = total[l] > 0 ? nnz[l] / total[l] : 0.0;
  for (std::size_t l = 0; l < L; ++l) {
    const auto& layer = arch.layers[l];
    if (!layer.has_lif) continue;
    const std::size_t plane = static_cast<std::size_t>(layer.out_spatial()) * layer.out_spatial();
    const std::size_t cols = static_cast<std::size_t>(S) * plane;
    BitMatrix bits(static_cast<std::size_t>(S), static_cast<std::size_t>(layer.neurons()));
    const auto& f = fired[l];
    for (std::size_t c = 0; c < static_cast<std::size_t>(layer.out_channels); ++c)
      for (std::size_t s = 0; s < static_cast<std::size_t>(S); ++s)
        for (std::size_t i = 0; i < plane; ++i)
          if (f[c * cols + s * plane + i]) bits.set(s, c * plane + i);
    rec.lif_layers.push_back({static_cast<int>(l), std::move(bits)});
  }
  return rec;
}

}  // namespace snnas
