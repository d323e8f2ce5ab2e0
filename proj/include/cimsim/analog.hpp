#pragma once

#include <bit>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cimsim/errors.hpp"
#include "cimsim/rng.hpp"

namespace cimsim {

/// Array geometry. Columns double as the unit capacitors of the in-array
/// DAC, so `cols` must be a power of two and at least 2^bits for any
/// digitization precision used with the array.
struct ArrayGeometry {
  std::uint32_t rows = 16;
  std::uint32_t cols = 32;

  void validate() const {
    if (rows == 0) throw ConfigError("geometry: rows must be positive");
    if (cols < 2 || !std::has_single_bit(cols))
      throw ConfigError("geometry: cols must be a power of two >= 2, got " +
                        std::to_string(cols));
  }
};

/// Per-column capacitances in units of the unit capacitor, plus the lumped
/// merge-switch/wire parasitic. The parasitic sits at the ground rail before
/// every merge, so it only loads the share, it never injects charge.
struct CapVector {
  std::vector<double> multiplier;  // one per column, nominal 1.0
  double parasitic = 0.0;          // units of the unit capacitor

  static CapVector ideal(std::uint32_t cols) {
    CapVector c;
    c.multiplier.assign(cols, 1.0);
    return c;
  }

  double total() const {
    double s = 0.0;
    for (double m : multiplier) s += m;
    return s;
  }

  void validate() const {
    if (multiplier.empty()) throw ShapeError("cap vector: no columns");
    for (double m : multiplier)
      if (!(m > 0.0)) throw RangeError("cap vector: multipliers must be > 0");
    if (parasitic < 0.0) throw RangeError("cap vector: parasitic must be >= 0");
  }
};

/// Behavioral nonideality knobs. Voltages are VDD fractions throughout.
struct NonidealityParams {
  double cap_mismatch_sigma = 0.0;     // relative std-dev of column caps
  double parasitic_frac = 0.0;         // parasitic as a fraction of cols * Cu
  double comparator_offset = 0.0;      // fixed per comparator instance
  double comparator_noise_sigma = 0.0; // input-referred, fresh draw per firing
  std::uint64_t seed = 0;

  void validate() const {
    if (cap_mismatch_sigma < 0.0 || comparator_noise_sigma < 0.0)
      throw RangeError("nonideality: sigmas must be >= 0");
    if (parasitic_frac < 0.0)
      throw RangeError("nonideality: parasitic_frac must be >= 0");
  }
};

enum class ArrayRole : std::uint8_t { kCompute, kDigitize };

/// One CiM array: stored weight bits addressed by row select, and the column
/// capacitances its sum line merges. The same state serves both operating
/// modes; `role` records which duty the fabric currently assigns to it.
struct CimArrayState {
  ArrayGeometry geometry;
  std::vector<std::uint8_t> weights;  // rows x cols, row-major, entries 0/1
  CapVector caps;
  ArrayRole role = ArrayRole::kCompute;

  static CimArrayState make(const ArrayGeometry& g,
                            ArrayRole role = ArrayRole::kCompute) {
    g.validate();
    CimArrayState a;
    a.geometry = g;
    a.weights.assign(static_cast<std::size_t>(g.rows) * g.cols, 0);
    a.caps = CapVector::ideal(g.cols);
    a.role = role;
    return a;
  }

  std::uint8_t weight(std::uint32_t r, std::uint32_t c) const {
    if (r >= geometry.rows || c >= geometry.cols)
      throw IndexError("weight access out of range");
    return weights[static_cast<std::size_t>(r) * geometry.cols + c];
  }

  void set_weight(std::uint32_t r, std::uint32_t c, std::uint8_t bit) {
    if (r >= geometry.rows || c >= geometry.cols)
      throw IndexError("weight access out of range");
    weights[static_cast<std::size_t>(r) * geometry.cols + c] = bit ? 1 : 0;
  }

  void set_row(std::uint32_t r, std::span<const std::uint8_t> bits) {
    if (r >= geometry.rows) throw IndexError("row out of range");
    if (bits.size() != geometry.cols)
      throw ShapeError("row width does not match array columns");
    for (std::uint32_t c = 0; c < geometry.cols; ++c)
      weights[static_cast<std::size_t>(r) * geometry.cols + c] = bits[c] ? 1 : 0;
  }
};

/// A voltage in units of VDD, constrained to [0,1].
struct NormalizedVoltage {
  double value = 0.0;
};

/// 1-bit column products for one selected row: a column discharges exactly
/// when its stored bit and the applied input bit are both 1. Flag 1 means
/// "discharged to ground".
inline std::vector<std::uint8_t> column_products(
    const CimArrayState& array, std::uint32_t row_index,
    std::span<const std::uint8_t> input_bits) {
  if (row_index >= array.geometry.rows)
    throw IndexError("column_products: row " + std::to_string(row_index) +
                     " out of range");
  if (input_bits.size() != array.geometry.cols)
    throw ShapeError("column_products: input length " +
                     std::to_string(input_bits.size()) + " != cols " +
                     std::to_string(array.geometry.cols));
  std::vector<std::uint8_t> flags(array.geometry.cols);
  const std::size_t base = static_cast<std::size_t>(row_index) * array.geometry.cols;
  for (std::uint32_t c = 0; c < array.geometry.cols; ++c)
    flags[c] = (array.weights[base + c] & (input_bits[c] ? 1 : 0)) ? 1 : 0;
  return flags;
}

/// Merges all column lines onto the sum line. Columns still at VDD (flag 0)
/// contribute their charge; discharged columns and the grounded parasitic
/// only add capacitance:
///
///   V = sum_{flag_i = 0} c_i / (sum_i c_i + parasitic)
///
/// With ideal caps and zero parasitic this is exactly (N - k) / N for k
/// discharged columns.
inline NormalizedVoltage charge_share_mav(std::span<const std::uint8_t> flags,
                                          const CapVector& caps) {
  if (flags.size() != caps.multiplier.size())
    throw ShapeError("charge_share_mav: flag/cap length mismatch");
  double high = 0.0;
  for (std::size_t i = 0; i < flags.size(); ++i)
    if (!flags[i]) high += caps.multiplier[i];
  return NormalizedVoltage{high / (caps.total() + caps.parasitic)};
}

/// In-array capacitive-DAC reference: precharge the `p` lowest-index columns
/// to VDD, discharge the rest, then merge. The prefix pattern is canonical so
/// a given array produces a repeatable reference ladder even with mismatch.
inline NormalizedVoltage dac_reference(std::uint32_t precharge_high_count,
                                       const CapVector& caps) {
  const std::uint32_t n = static_cast<std::uint32_t>(caps.multiplier.size());
  if (precharge_high_count > n)
    throw RangeError("dac_reference: precharge count " +
                     std::to_string(precharge_high_count) + " > columns " +
                     std::to_string(n));
  double high = 0.0;
  for (std::uint32_t i = 0; i < precharge_high_count; ++i)
    high += caps.multiplier[i];
  return NormalizedVoltage{high / (caps.total() + caps.parasitic)};
}

/// Behavioral rail-to-rail comparator: fires 1 iff
///   v - ref + offset + noise_sigma * unit_noise_draw >= 0.
/// Ties resolve to 1 so quantizer edges land on the lower code boundary.
inline std::uint8_t compare(NormalizedVoltage v, NormalizedVoltage ref,
                            const NonidealityParams& params,
                            double unit_noise_draw = 0.0) {
  const double margin = v.value - ref.value + params.comparator_offset +
                        params.comparator_noise_sigma * unit_noise_draw;
  return margin >= 0.0 ? 1 : 0;
}

/// Draws a mismatched cap vector: multipliers i.i.d. Normal(1, sigma),
/// clamped at 0.01 to stay physical, parasitic = parasitic_frac * cols.
/// Same seed, same vector.
inline CapVector draw_mismatch(const ArrayGeometry& geometry,
                               const NonidealityParams& params) {
  geometry.validate();
  params.validate();
  SplitMix64 rng(params.seed);
  CapVector caps;
  caps.multiplier.resize(geometry.cols);
  for (auto& m : caps.multiplier) {
    m = 1.0 + params.cap_mismatch_sigma * rng.next_gaussian();
    if (m < 0.01) m = 0.01;
  }
  caps.parasitic = params.parasitic_frac * geometry.cols;
  return caps;
}

}  // namespace cimsim
