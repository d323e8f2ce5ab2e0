#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "cimsim/chain.hpp"
#include "cimsim/errors.hpp"

namespace cimsim {

/// Ramp response: ordered (input, output code) pairs.
struct Staircase {
  std::vector<double> x;
  std::vector<std::uint32_t> code;
  std::uint32_t bits = 0;
};

struct LinearityReport {
  std::vector<double> dnl;  // per code, LSB units; index 0 pinned to 0
  std::vector<double> inl;  // endpoint-referenced running sum, LSB units
  double max_abs_dnl = 0.0;
  double max_abs_inl = 0.0;
  std::vector<std::uint32_t> missing_codes;
  bool has_missing_codes() const { return !missing_codes.empty(); }
};

/// Uniform ramp over [0,1) with 2^b * points_per_code samples through the
/// chain. Mismatch and offset are frozen in the chain; comparator noise, if
/// configured, is drawn per sample.
inline Staircase ramp_test(const AdcChain& chain, std::uint32_t points_per_code) {
  if (points_per_code < 8)
    throw RangeError("ramp_test: points_per_code must be >= 8");
  const std::uint32_t b = chain.config().bits;
  const std::uint64_t n = static_cast<std::uint64_t>(points_per_code) << b;

  Staircase stair;
  stair.bits = b;
  stair.x.reserve(n);
  stair.code.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    const double x = static_cast<double>(i) / static_cast<double>(n);
    stair.x.push_back(x);
    stair.code.push_back(chain.digitize(NormalizedVoltage{x}, i).code);
  }
  return stair;
}

/// Code-width linearity from transition points. The transition into code j is
/// the first ramp sample whose output reaches j or beyond (the monotone
/// envelope, so widths stay nonnegative under noise). DNL is against the
/// nominal 1-LSB width; INL is the running DNL sum with the endpoint line
/// removed, so INL at the last code is 0 by construction. A code that never
/// appears gets DNL -1 and a MissingCode flag.
inline LinearityReport dnl_inl(const Staircase& stair) {
  const std::uint32_t m = 1u << stair.bits;
  if (stair.x.empty() || stair.x.size() != stair.code.size())
    throw ShapeError("dnl_inl: empty or ragged staircase");

  std::vector<bool> seen(m, false);
  std::vector<double> transition(m + 1, 1.0);  // transition[j]: first x with code >= j
  std::uint32_t envelope = 0;
  bool first_sample = true;
  for (std::size_t i = 0; i < stair.x.size(); ++i) {
    const std::uint32_t c = stair.code[i];
    if (c >= m) throw RangeError("dnl_inl: code out of range");
    seen[c] = true;
    if (first_sample || c > envelope) {
      const std::uint32_t from = first_sample ? 0 : envelope + 1;
      for (std::uint32_t j = from; j <= c; ++j) transition[j] = stair.x[i];
      envelope = c;
      first_sample = false;
    }
  }

  LinearityReport rep;
  rep.dnl.assign(m, 0.0);
  rep.inl.assign(m, 0.0);
  const double w_ideal = 1.0 / static_cast<double>(m);
  for (std::uint32_t c = 1; c + 1 < m; ++c)
    rep.dnl[c] = (transition[c + 1] - transition[c]) / w_ideal - 1.0;
  for (std::uint32_t c = 0; c < m; ++c)
    if (!seen[c]) {
      rep.missing_codes.push_back(c);
      if (c >= 1 && c + 1 < m) rep.dnl[c] = -1.0;
    }

  double run = 0.0;
  std::vector<double> raw(m, 0.0);
  for (std::uint32_t c = 0; c < m; ++c) {
    run += rep.dnl[c];
    raw[c] = run;
  }
  const double endpoint = raw[m - 1];
  for (std::uint32_t c = 0; c < m; ++c) {
    rep.inl[c] = raw[c] - endpoint * static_cast<double>(c) /
                              static_cast<double>(m - 1);
    rep.max_abs_dnl = std::max(rep.max_abs_dnl, std::abs(rep.dnl[c]));
    rep.max_abs_inl = std::max(rep.max_abs_inl, std::abs(rep.inl[c]));
  }
  return rep;
}

struct LinearityQuantiles {
  double sigma = 0.0;
  double dnl_q50 = 0.0, dnl_q90 = 0.0, dnl_max = 0.0;
  double inl_q50 = 0.0, inl_q90 = 0.0, inl_max = 0.0;
};

namespace detail {
inline double nearest_rank(std::vector<double>& v, double q) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  std::size_t idx = static_cast<std::size_t>(std::ceil(q * n));
  if (idx > 0) --idx;
  if (idx >= n) idx = n - 1;
  return v[idx];
}
}  // namespace detail

/// Population linearity study: for each mismatch sigma on the grid, runs
/// `trials` seeded ramp tests (trial t reuses the same derived seed across
/// sigmas) and reports quantiles of max|DNL| and max|INL|.
inline std::vector<LinearityQuantiles> monte_carlo_linearity(
    const std::vector<double>& mismatch_sigmas, std::uint32_t trials,
    const ArrayGeometry& geometry, const AdcConfig& cfg,
    const NonidealityParams& base_params, std::uint32_t points_per_code = 64) {
  if (trials < 1) throw RangeError("monte_carlo_linearity: trials >= 1");
  std::vector<LinearityQuantiles> table;
  for (double sigma : mismatch_sigmas) {
    std::vector<double> dnl_max(trials), inl_max(trials);
    for (std::uint32_t t = 0; t < trials; ++t) {
      NonidealityParams p = base_params;
      p.cap_mismatch_sigma = sigma;
      p.seed = derive_seed(base_params.seed, 0xC0FFEE + t);
      const AdcChain chain = AdcChain::make(geometry, cfg, p);
      const LinearityReport rep = dnl_inl(ramp_test(chain, points_per_code));
      dnl_max[t] = rep.max_abs_dnl;
      inl_max[t] = rep.max_abs_inl;
    }
    LinearityQuantiles q;
    q.sigma = sigma;
    q.dnl_q50 = detail::nearest_rank(dnl_max, 0.50);
    q.dnl_q90 = detail::nearest_rank(dnl_max, 0.90);
    q.dnl_max = dnl_max.back();
    q.inl_q50 = detail::nearest_rank(inl_max, 0.50);
    q.inl_q90 = detail::nearest_rank(inl_max, 0.90);
    q.inl_max = inl_max.back();
    table.push_back(q);
  }
  return table;
}

}  // namespace cimsim
