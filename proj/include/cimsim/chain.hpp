#pragma once

#include <cstdint>
#include <optional>

#include "cimsim/adc.hpp"
#include "cimsim/analog.hpp"
#include "cimsim/cost.hpp"
#include "cimsim/errors.hpp"
#include "cimsim/rng.hpp"
#include "cimsim/search_tree.hpp"

namespace cimsim {

namespace detail {
constexpr std::uint64_t kDacSeedSalt = 0x01;
constexpr std::uint64_t kNoiseSeedSalt = 0xA0;
}  // namespace detail

/// A fully configured digitizer: DAC-side array state (with mismatch drawn
/// once from the seed), optional flash bank, optional search tree. Noise is
/// streamed per sample from a derived seed, so digitizing sample i gives the
/// same answer no matter the evaluation order or thread.
class AdcChain {
 public:
  static AdcChain make(const ArrayGeometry& geometry, const AdcConfig& cfg,
                       const NonidealityParams& params,
                       std::optional<SearchTree> tree = std::nullopt,
                       const CostParams& cost = {}) {
    geometry.validate();
    cfg.validate(geometry.cols);
    params.validate();
    cost.validate();

    AdcChain chain;
    chain.geometry_ = geometry;
    chain.cfg_ = cfg;
    chain.params_ = params;
    chain.cost_ = cost;

    NonidealityParams dac_params = params;
    dac_params.seed = derive_seed(params.seed, detail::kDacSeedSalt);
    chain.dac_ = CimArrayState::make(geometry, ArrayRole::kDigitize);
    chain.dac_.caps = draw_mismatch(geometry, dac_params);

    if (cfg.mode == AdcMode::kFlash || cfg.mode == AdcMode::kHybrid)
      chain.bank_ = FlashBank::make(geometry, cfg.flash_bits, params);

    if (cfg.mode == AdcMode::kTree) {
      if (tree) {
        chain.tree_ = std::move(*tree);
        if (chain.tree_.bits != cfg.bits)
          throw ConfigError("chain: tree bits != adc bits");
      } else {
        chain.tree_ = SearchTree::balanced(cfg.bits);
      }
    }
    return chain;
  }

  /// Digitizes measurand x (count polarity, x = 1 - V_MAV). `sample_index`
  /// selects the per-sample noise stream.
  DigitizationResult digitize(NormalizedVoltage x,
                              std::uint64_t sample_index = 0) const {
    SplitMix64 noise(derive_seed(derive_seed(params_.seed, detail::kNoiseSeedSalt),
                                 sample_index));
    switch (cfg_.mode) {
      case AdcMode::kSar:
        return sar_digitize(x, dac_, cfg_, params_, noise, cost_);
      case AdcMode::kFlash:
        return flash_digitize(x, bank_, cfg_.flash_bits, params_, noise, cost_,
                              cfg_.tolerant_bubbles);
      case AdcMode::kHybrid:
        return hybrid_digitize(x, bank_, dac_, cfg_, params_, noise, cost_);
      case AdcMode::kTree:
        return tree_digitize(x, tree_, dac_, params_, noise, cost_);
    }
    throw ConfigError("chain: unknown mode");
  }

  const AdcConfig& config() const { return cfg_; }
  const ArrayGeometry& geometry() const { return geometry_; }
  const NonidealityParams& params() const { return params_; }
  const CimArrayState& dac_array() const { return dac_; }
  const SearchTree& tree() const { return tree_; }

 private:
  ArrayGeometry geometry_;
  AdcConfig cfg_;
  NonidealityParams params_;
  CostParams cost_;
  CimArrayState dac_;
  FlashBank bank_;
  SearchTree tree_;
};

}  // namespace cimsim
