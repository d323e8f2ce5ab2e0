#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace cimsim {

/// Counter-free splitmix64 stream. The algorithm is fixed here (not delegated
/// to <random>) so that seeded simulations replay bit-identically regardless
/// of the standard library in use.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

  std::uint64_t next_u64() noexcept {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  /// Uniform in [0,1) with 53-bit resolution.
  double next_unit() noexcept {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Standard normal draw (Box-Muller, cosine branch). Consumes exactly two
  /// uniforms per call so streams stay aligned across call sites.
  double next_gaussian() noexcept {
    const double u1 = 1.0 - next_unit();  // (0,1], keeps log() finite
    const double u2 = next_unit();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::uint64_t state_;
};

/// Derives an independent child seed from (base, salt). Used to hand each
/// array, trial, or sample its own stream so evaluation order and parallel
/// fan-out cannot change results.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t salt) noexcept {
  SplitMix64 g(base ^ (salt * 0xd1342543de82ef95ull + 0x632be59bd9b4e019ull));
  return g.next_u64();
}

}  // namespace cimsim
