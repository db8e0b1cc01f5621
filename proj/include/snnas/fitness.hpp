#pragma once

// Hamming-kernel fitness: per LIF layer M[i][j] = N - beta * H(b_i, b_j),
// score F = log|det(sum_l M_l)|. QaFE scores a candidate after quantizing its
// randomly initialized weights.

#include <Eigen/Core>
#include <Eigen/LU>

#include <cmath>
#include <compare>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "snnas/arch.hpp"
#include "snnas/quant.hpp"
#include "snnas/spike_engine.hpp"

namespace snnas {

struct HammingMatrix {
  Eigen::MatrixXd m;
  std::size_t n_neurons = 0;
  double beta = 1.0;
};

/// Log-det fitness, or a sentinel that ranks below every finite score.
class FitnessScore {
 public:
  static constexpr double kInitialBest = -1000.0;

  FitnessScore() = default;
  explicit FitnessScore(double v) : value_(v) {}
  static FitnessScore sentinel() { return FitnessScore{}; }

  bool is_sentinel() const { return std::isinf(value_) && value_ < 0; }
  bool is_finite() const { return std::isfinite(value_); }
  /// -infinity for the sentinel.
  double value() const { return value_; }

  friend bool operator==(const FitnessScore&, const FitnessScore&) = default;
  friend auto operator<=>(const FitnessScore& a, const FitnessScore& b) {
    return a.value_ <=> b.value_;
  }

 private:
  double value_ = -std::numeric_limits<double>::infinity();
};

/// Default beta for a layer: S / N.
inline double default_beta(std::size_t samples, std::size_t neurons) {
  return static_cast<double>(samples) / static_cast<double>(neurons);
}

inline HammingMatrix hamming_matrix(const BitMatrix& b, double beta) {
  if (b.rows() < 2) throw std::invalid_argument("hamming_matrix needs S >= 2");
  if (b.cols() < 1) throw std::invalid_argument("hamming_matrix needs N >= 1");
  if (!(beta > 0.0)) throw std::invalid_argument("beta must be > 0");
  const auto S = static_cast<Eigen::Index>(b.rows());
  const double n = static_cast<double>(b.cols());
  HammingMatrix hm{Eigen::MatrixXd(S, S), b.cols(), beta};
  for (Eigen::Index i = 0; i < S; ++i) {
    hm.m(i, i) = n;
    for (Eigen::Index j = i + 1; j < S; ++j) {
      const double v = n - beta * static_cast<double>(b.hamming(static_cast<std::size_t>(i), static_cast<std::size_t>(j)));
      hm.m(i, j) = v;
      hm.m(j, i) = v;
    }
  }
  return hm;
}

inline constexpr double kSingularTolerance = 1e-12;

/// log|det K| via partial-pivot LU. A pivot below 1e-12 * max|K| marks K singular.
inline FitnessScore log_abs_det(const Eigen::MatrixXd& k) {
  const double scale = k.cwiseAbs().maxCoeff();
  if (!(scale > 0.0) || !std::isfinite(scale)) return FitnessScore::sentinel();
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(k);
  const auto& u = lu.matrixLU();
  double acc = 0.0;
  for (Eigen::Index i = 0; i < u.rows(); ++i) {
    const double pivot = std::abs(u(i, i));
    if (!(pivot > kSingularTolerance * scale)) return FitnessScore::sentinel();
    acc += std::log(pivot);
  }
  return FitnessScore{acc};
}

inline FitnessScore fitness_score(std::span<const HammingMatrix> matrices) {
  if (matrices.empty()) throw std::invalid_argument("no LIF layers recorded");
  const auto s = matrices.front().m.rows();
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(s, s);
  for (const auto& hm : matrices) {
    if (hm.m.rows() != s || hm.m.cols() != s) throw std::invalid_argument("kernel matrices differ in size");
    k += hm.m;
  }
  return log_abs_det(k);
}

struct FitnessOptions {
  std::optional<double> beta;  // empty: S / N_l per layer
};

inline FitnessScore score_activity(const ActivityRecord& rec, const FitnessOptions& opts = {}) {
  std::vector<HammingMatrix> mats;
  mats.reserve(rec.lif_layers.size());
  for (const auto& la : rec.lif_layers) {
    const double beta = opts.beta.value_or(default_beta(la.spikes.rows(), la.spikes.cols()));
    mats.push_back(hamming_matrix(la.spikes, beta));
  }
  return fitness_score(mats);
}

struct QafeEvaluation {
  FitnessScore score;
  ActivityRecord activity;
};

/// init -> quantize (if a spec is given) -> forward -> Hamming kernels -> log-det.
inline QafeEvaluation qafe_evaluate(const NetworkArch& arch, const std::optional<QuantSpec>& spec,
                                    const Batch& batch, const LifParams& lif, std::uint64_t seed,
                                    const FitnessOptions& opts = {}) {
  auto weights = init_weights(arch, seed);
  if (spec) {
    for (auto& w : weights) w = quantize(w, *spec);
  }
  QafeEvaluation ev;
  ev.activity = forward(arch, weights, batch, lif);
  ev.score = score_activity(ev.activity, opts);
  return ev;
}

inline FitnessScore qafe_score(const NetworkArch& arch, const QuantSpec& spec, const Batch& batch,
                               const LifParams& lif, std::uint64_t seed, const FitnessOptions& opts = {}) {
  return qafe_evaluate(arch, spec, batch, lif, seed, opts).score;
}

}  // namespace snnas
