#pragma once

#include "cimsim/errors.hpp"

namespace cimsim {

/// Calibratable energy/time constants. Energies are in units of Cu*VDD^2,
/// time in seconds. The defaults are calibrated so one 5-bit conversion on a
/// 32-column array totals 74.23 units:
///
///   31 column toggles * 1.0 + 5 firings * 6.0 + 5 merges * 2.646 = 74.23
///
/// Absolute joules are out of the model; only the relative ordering between
/// digitization styles is meaningful.
struct CostParams {
  double e_precharge = 1.0;   // per column rail toggle
  double e_compare = 6.0;     // per comparator firing
  double e_merge = 2.646;     // per charge-share event
  double cycle_time = 1e-7;   // seconds per comparison cycle (10 MHz)

  void validate() const {
    if (e_precharge < 0.0 || e_compare < 0.0 || e_merge < 0.0 || cycle_time < 0.0)
      throw RangeError("cost params must be >= 0");
  }
};

}  // namespace cimsim
