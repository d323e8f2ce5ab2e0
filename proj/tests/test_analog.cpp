#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "cimsim/analog.hpp"

using namespace cimsim;

namespace {

std::vector<std::uint8_t> flags_with_k_set(std::uint32_t n, std::uint32_t k) {
  std::vector<std::uint8_t> f(n, 0);
  for (std::uint32_t i = 0; i < k; ++i) f[i] = 1;
  return f;
}

}  // namespace

TEST_CASE("column products are the elementwise AND of row and input") {
  auto array = CimArrayState::make({4, 4});
  array.set_row(0, std::vector<std::uint8_t>{1, 0, 1, 1});
  array.set_row(1, std::vector<std::uint8_t>{0, 0, 0, 0});
  array.set_row(2, std::vector<std::uint8_t>{1, 1, 1, 1});

  const std::vector<std::uint8_t> ones{1, 1, 1, 1};
  CHECK(column_products(array, 1, ones) == std::vector<std::uint8_t>{0, 0, 0, 0});
  CHECK(column_products(array, 2, ones) == std::vector<std::uint8_t>{1, 1, 1, 1});
  const std::vector<std::uint8_t> in{1, 1, 0, 1};
  CHECK(column_products(array, 0, in) == std::vector<std::uint8_t>{1, 0, 0, 1});
}

TEST_CASE("column products reject bad shapes and rows") {
  auto array = CimArrayState::make({4, 4});
  const std::vector<std::uint8_t> short_in{1, 1};
  CHECK_THROWS_AS(column_products(array, 0, short_in), ShapeError);
  const std::vector<std::uint8_t> in{1, 1, 1, 1};
  CHECK_THROWS_AS(column_products(array, 4, in), IndexError);
}

TEST_CASE("charge share hits (N-k)/N exactly with ideal caps") {
  const auto caps = CapVector::ideal(32);
  CHECK(charge_share_mav(flags_with_k_set(32, 8), caps).value == 0.75);
  CHECK(charge_share_mav(flags_with_k_set(32, 0), caps).value == 1.0);
  CHECK(charge_share_mav(flags_with_k_set(32, 32), caps).value == 0.0);
  for (std::uint32_t k = 0; k <= 32; ++k) {
    const double v = charge_share_mav(flags_with_k_set(32, k), caps).value;
    CHECK(v == Catch::Approx((32.0 - k) / 32.0).epsilon(0).margin(1e-15));
  }
}

TEST_CASE("parasitic loads the share per charge conservation") {
  // independent evaluation: 24 columns high, total cap 32 + 3.2
  auto caps = CapVector::ideal(32);
  caps.parasitic = 3.2;
  const double v = charge_share_mav(flags_with_k_set(32, 8), caps).value;
  CHECK(v == Catch::Approx(24.0 / 35.2).epsilon(1e-12));
}

TEST_CASE("setting an extra discharge flag never raises the MAV") {
  SplitMix64 rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    NonidealityParams p;
    p.cap_mismatch_sigma = 0.05;
    p.parasitic_frac = rng.next_unit() * 0.2;
    p.seed = rng.next_u64();
    const auto caps = draw_mismatch({16, 32}, p);
    std::vector<std::uint8_t> flags(32);
    for (auto& f : flags) f = rng.next_u64() & 1;
    const double before = charge_share_mav(flags, caps).value;
    const auto idx = static_cast<std::size_t>(rng.next_u64() % 32);
    flags[idx] = 1;
    CHECK(charge_share_mav(flags, caps).value <= before);
  }
}

TEST_CASE("dac reference: rails, midpoint, monotone in p") {
  const auto caps = CapVector::ideal(32);
  CHECK(dac_reference(0, caps).value == 0.0);
  CHECK(dac_reference(32, caps).value == 1.0);
  CHECK(dac_reference(16, caps).value == 0.5);
  CHECK_THROWS_AS(dac_reference(33, caps), RangeError);

  SplitMix64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    NonidealityParams p;
    p.cap_mismatch_sigma = 0.1;
    p.parasitic_frac = 0.05;
    p.seed = rng.next_u64();
    const auto drawn = draw_mismatch({16, 32}, p);
    double prev = -1.0;
    for (std::uint32_t q = 0; q <= 32; ++q) {
      const double v = dac_reference(q, drawn).value;
      CHECK(v >= prev);
      prev = v;
    }
  }
}

TEST_CASE("dac reference under 2% mismatch stays near the ideal level") {
  NonidealityParams p;
  p.cap_mismatch_sigma = 0.02;
  p.seed = 42;
  const auto caps = draw_mismatch({16, 32}, p);
  CHECK(std::abs(dac_reference(24, caps).value - 0.75) < 0.02);
}

TEST_CASE("comparator fires on sign of v - ref + offset + noise, ties to 1") {
  NonidealityParams ideal;
  CHECK(compare({0.6}, {0.5}, ideal) == 1);
  CHECK(compare({0.5}, {0.5}, ideal) == 1);  // tie rule
  CHECK(compare({0.4}, {0.5}, ideal) == 0);

  NonidealityParams off;
  off.comparator_offset = -0.15;
  CHECK(compare({0.6}, {0.5}, off) == 0);  // margin -0.05

  NonidealityParams noisy;
  noisy.comparator_noise_sigma = 0.2;
  CHECK(compare({0.4}, {0.5}, noisy, 1.0) == 1);  // +0.2 draw flips it
}

TEST_CASE("mismatch draw: sigma 0 is exactly nominal, same seed same vector") {
  NonidealityParams p;
  p.seed = 123;
  const auto a = draw_mismatch({16, 32}, p);
  for (double m : a.multiplier) CHECK(m == 1.0);
  CHECK(a.parasitic == 0.0);

  p.cap_mismatch_sigma = 0.03;
  p.parasitic_frac = 0.1;
  const auto b = draw_mismatch({16, 32}, p);
  const auto c = draw_mismatch({16, 32}, p);
  CHECK(b.multiplier == c.multiplier);
  CHECK(b.parasitic == 32 * 0.1);
}

TEST_CASE("mismatch draw matches its nominal spread") {
  NonidealityParams p;
  p.cap_mismatch_sigma = 0.02;
  double sum = 0.0, sq = 0.0;
  const int n_draws = 10000 / 32 * 32;
  int count = 0;
  for (int rep = 0; rep < n_draws / 32; ++rep) {
    p.seed = 1000 + rep;
    const auto caps = draw_mismatch({16, 32}, p);
    for (double m : caps.multiplier) {
      sum += m;
      sq += m * m;
      ++count;
    }
  }
  const double mean = sum / count;
  const double std = std::sqrt(sq / count - mean * mean);
  CHECK(std > 0.018);
  CHECK(std < 0.022);
}

TEST_CASE("equal parasitic on both arrays cancels in the comparison") {
  // both voltages scale by N/(N + parasitic), so the decision matches the
  // ideal (N - k) vs p comparison for every k and p
  for (double frac : {0.05, 0.1, 0.2}) {
    auto caps = CapVector::ideal(32);
    caps.parasitic = frac * 32;
    NonidealityParams ideal;
    for (std::uint32_t k = 0; k <= 32; ++k) {
      const auto v_mav = charge_share_mav(flags_with_k_set(32, k), caps);
      for (std::uint32_t p = 0; p <= 32; ++p) {
        const auto v_ref = dac_reference(p, caps);
        const std::uint8_t got = compare(v_mav, v_ref, ideal);
        const std::uint8_t want = (32 - k) >= p ? 1 : 0;
        REQUIRE(got == want);
      }
    }
  }
}
