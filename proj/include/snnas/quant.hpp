#pragma once

// Fixed-point weight quantization (1 sign bit + fractional bits, per-tensor
// fixed scale, round-half-to-even, saturating).

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace snnas {

enum class Rounding : std::uint8_t { NearestEven };

struct QuantSpec {
  int bit_w = 8;
  int bit_d = 1;
  Rounding rounding = Rounding::NearestEven;
  std::optional<int> frac_bits_override;

  int frac_bits() const { return frac_bits_override.value_or(bit_w - 1); }

  void validate() const {
    if (bit_w < 4 || bit_w > 32)
      throw std::invalid_argument("bit_w must be in 4..32, got " + std::to_string(bit_w));
    if (bit_d < 1) throw std::invalid_argument("bit_d must be >= 1");
    if (bit_d > bit_w) throw std::invalid_argument("bit_d exceeds bit_w");
    if (frac_bits_override && (*frac_bits_override < 0 || *frac_bits_override > 62))
      throw std::invalid_argument("frac_bits must be in 0..62");
  }

  friend bool operator==(const QuantSpec&, const QuantSpec&) = default;
};

/// Device cells (crossbar columns) per weight word: ceil(bit_w / bit_d).
inline int adjustment_factor(int bit_w, int bit_d) {
  if (bit_w < 1 || bit_d < 1) throw std::invalid_argument("bit widths must be >= 1");
  return (bit_w + bit_d - 1) / bit_d;
}

inline int adjustment_factor(const QuantSpec& spec) {
  return adjustment_factor(spec.bit_w, spec.bit_d);
}

/// Quantizes a single value onto the bit_w-bit two's-complement grid with
/// step 2^-f. Codes saturate at [-2^(bit_w-1), 2^(bit_w-1)-1].
inline double quantize_value(double w, int bit_w, int frac_bits) {
  if (!std::isfinite(w)) throw std::domain_error("non-finite weight");
  const double scale = std::ldexp(1.0, frac_bits);
  const double code_min = -std::ldexp(1.0, bit_w - 1);
  const double code_max = std::ldexp(1.0, bit_w - 1) - 1.0;
  // std::nearbyint honours the default FE_TONEAREST mode: ties go to even.
  double code = std::nearbyint(w * scale);
  if (code < code_min) code = code_min;
  if (code > code_max) code = code_max;
  return code / scale;
}

inline std::vector<double> quantize(std::span<const double> weights, const QuantSpec& spec) {
  spec.validate();
  const int f = spec.frac_bits();
  std::vector<double> out(weights.size());
  for (std::size_t i = 0; i < weights.size(); ++i) out[i] = quantize_value(weights[i], spec.bit_w, f);
  return out;
}

/// Largest value on the grid: (2^(bit_w-1) - 1) / 2^f.
inline double grid_max(const QuantSpec& spec) {
  return (std::ldexp(1.0, spec.bit_w - 1) - 1.0) / std::ldexp(1.0, spec.frac_bits());
}

inline double grid_min(const QuantSpec& spec) {
  return -std::ldexp(1.0, spec.bit_w - 1) / std::ldexp(1.0, spec.frac_bits());
}

}  // namespace snnas
