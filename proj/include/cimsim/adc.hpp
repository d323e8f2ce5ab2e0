#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cimsim/analog.hpp"
#include "cimsim/cost.hpp"
#include "cimsim/errors.hpp"
#include "cimsim/rng.hpp"
#include "cimsim/search_tree.hpp"

namespace cimsim {

enum class AdcMode : std::uint8_t { kSar, kFlash, kHybrid, kTree };

inline const char* to_string(AdcMode m) {
  switch (m) {
    case AdcMode::kSar: return "sar";
    case AdcMode::kFlash: return "flash";
    case AdcMode::kHybrid: return "hybrid";
    case AdcMode::kTree: return "tree";
  }
  return "?";
}

/// Digitization configuration. Polarity is fixed: the measurand is
/// x = 1 - V_MAV, so the output code grows with the column product-sum count
/// and a zero sum digitizes to code 0 exactly. The comparator inputs are
/// swapped and the DAC precharges complementary patterns accordingly; the
/// charge physics is unchanged.
struct AdcConfig {
  std::uint32_t bits = 5;
  AdcMode mode = AdcMode::kSar;
  std::uint32_t flash_bits = 2;    // m, used by kFlash (m = bits) and kHybrid
  bool tolerant_bubbles = false;   // repair non-monotone thermometer words

  void validate(std::uint32_t cols) const {
    if (bits == 0 || bits > 16) throw ConfigError("adc: bits out of range");
    if ((1u << bits) > cols)
      throw ConfigError("adc: 2^bits = " + std::to_string(1u << bits) +
                        " exceeds cols = " + std::to_string(cols));
    if (mode == AdcMode::kHybrid && (flash_bits < 1 || flash_bits >= bits))
      throw ConfigError("adc: hybrid needs 1 <= flash_bits < bits");
    if (mode == AdcMode::kFlash && flash_bits != bits)
      throw ConfigError("adc: flash mode resolves all bits, set flash_bits = bits");
  }
};

/// One comparator firing: `p` is the tested threshold in column counts
/// (code polarity), `bit` the comparator output, `mode` the phase it ran in.
struct TraceEntry {
  std::uint32_t cycle = 0;
  std::uint32_t p = 0;
  std::uint8_t bit = 0;
  AdcMode mode = AdcMode::kSar;
};

struct DigitizationResult {
  std::uint32_t code = 0;
  std::vector<std::uint8_t> bits_msb_first;
  std::uint32_t comparisons = 0;
  std::uint32_t cycles = 0;
  std::vector<TraceEntry> trace;
  double energy = 0.0;
};

/// Reference bank for flash digitization: 2^m - 1 DAC-configured arrays, one
/// per threshold p_j = j * N / 2^m, each with its own mismatch draw.
struct FlashBank {
  struct Reference {
    CimArrayState array;
    std::uint32_t p = 0;  // threshold in column counts, strictly increasing
  };
  std::vector<Reference> refs;

  static FlashBank make(const ArrayGeometry& geometry, std::uint32_t m,
                        const NonidealityParams& params) {
    geometry.validate();
    if (m == 0 || (1u << m) > geometry.cols)
      throw ConfigError("flash bank: bad fan-out m");
    FlashBank bank;
    const std::uint32_t step = geometry.cols >> m;
    for (std::uint32_t j = 1; j < (1u << m); ++j) {
      Reference r;
      r.array = CimArrayState::make(geometry, ArrayRole::kDigitize);
      NonidealityParams per = params;
      per.seed = derive_seed(params.seed, 0x10 + j);
      r.array.caps = draw_mismatch(geometry, per);
      r.p = j * step;
      bank.refs.push_back(std::move(r));
    }
    return bank;
  }

  void validate() const {
    if (refs.empty()) throw ConfigError("flash bank: empty");
    for (std::size_t j = 1; j < refs.size(); ++j)
      if (refs[j].p <= refs[j - 1].p)
        throw ConfigError("flash bank: thresholds must strictly increase");
  }
};

/// Decodes a thermometer word into the count of leading ones. A 1 after a 0
/// is a bubble; by default that is surfaced as an error, optionally repaired
/// by majority (count of ones).
inline std::uint32_t thermometer_to_binary(std::span<const std::uint8_t> flags,
                                           bool tolerant = false) {
  std::uint32_t lead = 0;
  while (lead < flags.size() && flags[lead]) ++lead;
  for (std::size_t i = lead; i < flags.size(); ++i) {
    if (flags[i]) {
      if (!tolerant)
        throw BubbleError("thermometer bubble at position " + std::to_string(i));
      std::uint32_t ones = 0;
      for (std::uint8_t f : flags) ones += f ? 1 : 0;
      return ones;
    }
  }
  return lead;
}

namespace detail {

/// Tracks the DAC precharge pattern of one reference array and prices the
/// switching. Patterns are canonical prefixes, so moving from p_old to p_new
/// toggles |p_new - p_old| column rails. Every conversion starts from the
/// ground rail.
struct DacEnergy {
  std::uint32_t pattern = 0;
  double energy = 0.0;

  void generate(std::uint32_t p_new, const CostParams& cost) {
    const std::uint32_t toggles =
        p_new > pattern ? p_new - pattern : pattern - p_new;
    energy += toggles * cost.e_precharge + cost.e_merge;
    pattern = p_new;
  }
};

/// One threshold test in count polarity: the DAC holds the complementary
/// prefix pattern and the comparator inputs are swapped, so bit = 1 iff the
/// measurand (plus offset and noise) is at or above the threshold. Both
/// sides go through the same 1 - v map, so a measurand produced by the same
/// charge physics as the reference ties exactly and common-mode loading
/// cancels bit-for-bit.
inline std::uint8_t test_threshold(double x, std::uint32_t p_threshold,
                                   const CimArrayState& dac,
                                   const NonidealityParams& params,
                                   SplitMix64& noise_rng, DacEnergy& dac_state,
                                   const CostParams& cost, double& energy) {
  const std::uint32_t n = dac.geometry.cols;
  const std::uint32_t p_phys = n - p_threshold;
  dac_state.generate(p_phys, cost);
  const NormalizedVoltage ref = dac_reference(p_phys, dac.caps);
  const NormalizedVoltage x_threshold{1.0 - ref.value};
  const double draw =
      params.comparator_noise_sigma > 0.0 ? noise_rng.next_gaussian() : 0.0;
  const std::uint8_t bit = compare(NormalizedVoltage{x}, x_threshold, params, draw);
  energy += dac_state.energy + cost.e_compare;
  dac_state.energy = 0.0;
  return bit;
}

inline std::vector<std::uint8_t> code_bits_msb_first(std::uint32_t code,
                                                     std::uint32_t bits) {
  std::vector<std::uint8_t> out(bits);
  for (std::uint32_t i = 0; i < bits; ++i)
    out[i] = (code >> (bits - 1 - i)) & 1u;
  return out;
}

}  // namespace detail

/// Successive-approximation digitization: b precharge+compare cycles walking
/// the classic binary search over precharge counts, starting at p = N/2.
inline DigitizationResult sar_digitize(NormalizedVoltage x,
                                       const CimArrayState& dac_array,
                                       const AdcConfig& cfg,
                                       const NonidealityParams& nonideal,
                                       SplitMix64& noise_rng,
                                       const CostParams& cost = {}) {
  if (cfg.mode != AdcMode::kSar) throw ConfigError("sar_digitize: mode != sar");
  cfg.validate(dac_array.geometry.cols);
  const std::uint32_t b = cfg.bits;
  const std::uint32_t lsb_cols = dac_array.geometry.cols >> b;

  DigitizationResult res;
  detail::DacEnergy dac_state;
  std::uint32_t acc = 0;
  for (std::uint32_t cycle = 0; cycle < b; ++cycle) {
    const std::uint32_t trial = acc | (1u << (b - 1 - cycle));
    const std::uint32_t p = trial * lsb_cols;
    const std::uint8_t bit = detail::test_threshold(
        x.value, p, dac_array, nonideal, noise_rng, dac_state, cost, res.energy);
    if (bit) acc = trial;
    res.trace.push_back({cycle, p, bit, AdcMode::kSar});
    res.bits_msb_first.push_back(bit);
  }
  res.code = acc;
  res.comparisons = b;
  res.cycles = b;
  return res;
}

/// Flash digitization of the m most significant bits: all 2^m - 1 references
/// are compared in the same cycle and the thermometer word is decoded.
inline DigitizationResult flash_digitize(NormalizedVoltage x,
                                         const FlashBank& bank, std::uint32_t m,
                                         const NonidealityParams& nonideal,
                                         SplitMix64& noise_rng,
                                         const CostParams& cost = {},
                                         bool tolerant_bubbles = false) {
  bank.validate();
  if (bank.refs.size() != (1u << m) - 1)
    throw ConfigError("flash_digitize: bank holds " +
                      std::to_string(bank.refs.size()) + " references, need " +
                      std::to_string((1u << m) - 1));

  DigitizationResult res;
  std::vector<std::uint8_t> thermometer;
  for (const auto& ref : bank.refs) {
    detail::DacEnergy dac_state;  // each bank array charges from ground
    const std::uint8_t bit =
        detail::test_threshold(x.value, ref.p, ref.array, nonideal, noise_rng,
                               dac_state, cost, res.energy);
    thermometer.push_back(bit);
    res.trace.push_back({0, ref.p, bit, AdcMode::kFlash});
  }
  res.code = thermometer_to_binary(thermometer, tolerant_bubbles);
  res.bits_msb_first = detail::code_bits_msb_first(res.code, m);
  res.comparisons = static_cast<std::uint32_t>(bank.refs.size());
  res.cycles = 1;
  return res;
}

/// Hybrid conversion: one flash cycle resolves the m MSBs, then an SA tail
/// resolves the remaining b - m bits with the search seeded from the flash
/// window. Ideal codes are identical to plain SA for every input.
inline DigitizationResult hybrid_digitize(NormalizedVoltage x,
                                          const FlashBank& bank,
                                          const CimArrayState& sar_array,
                                          const AdcConfig& cfg,
                                          const NonidealityParams& nonideal,
                                          SplitMix64& noise_rng,
                                          const CostParams& cost = {}) {
  if (cfg.mode != AdcMode::kHybrid)
    throw ConfigError("hybrid_digitize: mode != hybrid");
  cfg.validate(sar_array.geometry.cols);
  const std::uint32_t b = cfg.bits;
  const std::uint32_t m = cfg.flash_bits;
  const std::uint32_t lsb_cols = sar_array.geometry.cols >> b;

  DigitizationResult res = flash_digitize(x, bank, m, nonideal, noise_rng, cost,
                                          cfg.tolerant_bubbles);
  std::uint32_t acc = res.code << (b - m);

  detail::DacEnergy dac_state;
  for (std::uint32_t i = 0; i < b - m; ++i) {
    const std::uint32_t cycle = 1 + i;
    const std::uint32_t trial = acc | (1u << (b - m - 1 - i));
    const std::uint32_t p = trial * lsb_cols;
    const std::uint8_t bit = detail::test_threshold(
        x.value, p, sar_array, nonideal, noise_rng, dac_state, cost, res.energy);
    if (bit) acc = trial;
    res.trace.push_back({cycle, p, bit, AdcMode::kSar});
  }
  res.code = acc;
  res.bits_msb_first = detail::code_bits_msb_first(acc, b);
  res.comparisons += b - m;
  res.cycles = 1 + (b - m);
  return res;
}

/// Walks an alphabetic search tree; each internal node is one threshold
/// comparison. The reached leaf is the code, its depth the comparison count.
/// Any valid alphabetic tree yields the ideal quantizer under ideal
/// conditions; the shape only changes how many cycles it takes.
inline DigitizationResult tree_digitize(NormalizedVoltage x,
                                        const SearchTree& tree,
                                        const CimArrayState& dac_array,
                                        const NonidealityParams& nonideal,
                                        SplitMix64& noise_rng,
                                        const CostParams& cost = {}) {
  tree.validate();
  if ((1u << tree.bits) > dac_array.geometry.cols)
    throw ConfigError("tree_digitize: code space exceeds columns");
  const std::uint32_t lsb_cols = dac_array.geometry.cols >> tree.bits;

  DigitizationResult res;
  detail::DacEnergy dac_state;
  std::int32_t node = tree.root;
  std::uint32_t cycle = 0;
  while (!tree.nodes[node].is_leaf()) {
    const auto& n = tree.nodes[node];
    const std::uint32_t p = static_cast<std::uint32_t>(n.threshold) * lsb_cols;
    const std::uint8_t bit = detail::test_threshold(
        x.value, p, dac_array, nonideal, noise_rng, dac_state, cost, res.energy);
    res.trace.push_back({cycle, p, bit, AdcMode::kTree});
    node = bit ? n.right : n.left;
    ++cycle;
  }
  res.code = static_cast<std::uint32_t>(tree.nodes[node].leaf_code);
  res.bits_msb_first = detail::code_bits_msb_first(res.code, tree.bits);
  res.comparisons = cycle;
  res.cycles = cycle;
  return res;
}

/// Replays a trace as interval narrowing over the code space: bit 1 raises
/// the lower bound to the tested threshold, bit 0 lowers the upper bound.
/// Every mode's trace pins the code to a width-1 interval.
inline std::uint32_t reconstruct_code(std::span<const TraceEntry> trace,
                                      std::uint32_t bits, std::uint32_t cols) {
  const std::uint32_t lsb_cols = cols >> bits;
  std::uint32_t lo = 0;
  std::uint32_t hi = 1u << bits;
  for (const auto& e : trace) {
    if (e.p % lsb_cols != 0)
      throw StructureError("trace: threshold off the code grid");
    const std::uint32_t t = e.p / lsb_cols;
    if (e.bit)
      lo = t > lo ? t : lo;
    else
      hi = t < hi ? t : hi;
  }
  if (hi - lo != 1)
    throw StructureError("trace does not pin a unique code");
  return lo;
}

}  // namespace cimsim
