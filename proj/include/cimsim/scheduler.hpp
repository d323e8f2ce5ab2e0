#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "cimsim/adc.hpp"
#include "cimsim/cost.hpp"
#include "cimsim/errors.hpp"
#include "cimsim/format.hpp"

namespace cimsim {

enum class TopologyMode : std::uint8_t { kPairSar, kOneToManyFlash, kHybrid };

inline const char* to_string(TopologyMode m) {
  switch (m) {
    case TopologyMode::kPairSar: return "pair_sar";
    case TopologyMode::kOneToManyFlash: return "one_to_many_flash";
    case TopologyMode::kHybrid: return "hybrid";
  }
  return "?";
}

/// Fabric topology: which arrays compute, which hold references, and the
/// coupling pattern between them. For pair mode the two members of a pair
/// swap compute/digitize duty on alternating samples.
struct CouplingPlan {
  TopologyMode mode = TopologyMode::kPairSar;
  std::uint32_t n_arrays = 2;
  std::uint32_t flash_fanout_m = 0;  // m MSBs resolved in the flash phase
  std::vector<std::uint32_t> compute_arrays;
  std::vector<std::uint32_t> reference_arrays;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;

  struct Edge {
    std::uint32_t phase;  // 0 = flash window / even samples, 1 = tail / odd
    std::uint32_t compute_array;
    std::uint32_t reference_array;
  };
  std::vector<Edge> edges;
};

inline CouplingPlan build_topology(std::uint32_t n_arrays, TopologyMode mode,
                                   std::uint32_t m = 0) {
  CouplingPlan plan;
  plan.mode = mode;
  plan.n_arrays = n_arrays;
  plan.flash_fanout_m = m;

  switch (mode) {
    case TopologyMode::kPairSar: {
      if (n_arrays < 2 || n_arrays % 2 != 0)
        throw TopologyError("pair_sar needs an even array count >= 2, got " +
                            std::to_string(n_arrays));
      for (std::uint32_t p = 0; p < n_arrays / 2; ++p) {
        plan.pairs.emplace_back(2 * p, 2 * p + 1);
        plan.edges.push_back({0, 2 * p, 2 * p + 1});
        plan.edges.push_back({1, 2 * p + 1, 2 * p});
      }
      break;
    }
    case TopologyMode::kOneToManyFlash:
    case TopologyMode::kHybrid: {
      if (m < 1) throw TopologyError("flash/hybrid topology needs m >= 1");
      const std::uint32_t n_refs = (1u << m) - 1;
      if (n_arrays < 1 + n_refs)
        throw TopologyError("topology needs >= " + std::to_string(1 + n_refs) +
                            " arrays for m = " + std::to_string(m) + ", got " +
                            std::to_string(n_arrays));
      const std::uint32_t n_compute = n_arrays - n_refs;
      for (std::uint32_t i = 0; i < n_compute; ++i)
        plan.compute_arrays.push_back(i);
      for (std::uint32_t j = 0; j < n_refs; ++j)
        plan.reference_arrays.push_back(n_compute + j);
      for (std::uint32_t i = 0; i < n_compute; ++i) {
        for (std::uint32_t j = 0; j < n_refs; ++j)
          plan.edges.push_back({0, i, n_compute + j});
        if (mode == TopologyMode::kHybrid)
          plan.edges.push_back({1, i, n_compute + i % n_refs});
      }
      break;
    }
  }
  return plan;
}

enum class Action : std::uint8_t { kCompute, kRefGen, kCompare, kIdle };

inline const char* to_string(Action a) {
  switch (a) {
    case Action::kCompute: return "COMPUTE";
    case Action::kRefGen: return "REF_GEN";
    case Action::kCompare: return "COMPARE";
    case Action::kIdle: return "IDLE";
  }
  return "?";
}

/// One scheduled action. `units` is the priced quantity: toggled column
/// rails for REF_GEN, comparator firings for COMPARE, merge events for
/// COMPUTE. sample_id -1 marks work not owned by a single sample (shared
/// flash reference generation, idle).
struct TraceRow {
  std::uint64_t cycle = 0;
  std::uint32_t array_id = 0;
  Action action = Action::kIdle;
  std::int64_t sample_id = -1;
  std::uint32_t units = 0;
  double energy = 0.0;
};

struct EnergyBreakdown {
  double reference_generation = 0.0;
  double reference_generation_shared = 0.0;  // flash-window part of the above
  double comparisons = 0.0;
  double merges = 0.0;
  double total() const { return reference_generation + comparisons + merges; }
};

struct ArrayUsage {
  std::uint64_t busy = 0;
  std::uint64_t idle = 0;
  double energy = 0.0;
};

struct ScheduleReport {
  std::uint64_t total_cycles = 0;
  std::uint64_t samples_digitized = 0;
  std::vector<ArrayUsage> per_array;
  EnergyBreakdown energy;
  double throughput = 0.0;  // samples per cycle
  double wall_time_s = 0.0;
  std::vector<TraceRow> trace;
};

/// Re-prices a trace under the given cost constants. Each REF_GEN row is one
/// charge-share event plus `units` rail toggles; COMPUTE is one merge;
/// COMPARE is `units` firings.
inline EnergyBreakdown tally_energy(const std::vector<TraceRow>& trace,
                                    const CostParams& cost) {
  EnergyBreakdown e;
  for (const auto& row : trace) {
    switch (row.action) {
      case Action::kRefGen:
        e.reference_generation += row.units * cost.e_precharge;
        if (row.sample_id < 0)
          e.reference_generation_shared += row.units * cost.e_precharge;
        e.merges += cost.e_merge;
        break;
      case Action::kCompare:
        e.comparisons += row.units * cost.e_compare;
        break;
      case Action::kCompute:
        e.merges += row.units * cost.e_merge;
        break;
      case Action::kIdle:
        break;
    }
  }
  return e;
}

namespace detail {

/// Canonical successive-approximation switching model: the k-th comparison
/// cycle of a b-bit search re-patterns N / 2^k column rails (the first cycle
/// charges the midpoint pattern from ground). Data-independent, so schedules
/// and their energies are deterministic.
inline std::uint32_t sar_cycle_toggles(std::uint32_t cols, std::uint32_t k) {
  return cols >> k;
}

inline double price(Action a, std::uint32_t units, const CostParams& cost) {
  switch (a) {
    case Action::kRefGen: return units * cost.e_precharge + cost.e_merge;
    case Action::kCompare: return units * cost.e_compare;
    case Action::kCompute: return units * cost.e_merge;
    case Action::kIdle: return 0.0;
  }
  return 0.0;
}

}  // namespace detail

/// Cycle-accurate simulation of a coupling plan.
///
/// Workload semantics: `samples_per_slot` conversions per compute slot. A
/// pair is one slot (its members alternate compute duty); in flash/hybrid
/// fabrics every compute array is a slot. Each sample costs one compute
/// cycle (single bit plane) plus its digitization. Batches are barriers:
/// reference arrays never serve a new batch while tails of the previous one
/// are still running.
inline ScheduleReport simulate_schedule(const CouplingPlan& plan,
                                        std::uint64_t samples_per_slot,
                                        const AdcConfig& cfg,
                                        const CostParams& cost,
                                        std::uint32_t cols = 32) {
  cost.validate();
  const std::uint32_t b = cfg.bits;
  std::vector<TraceRow> rows;
  std::uint64_t total_cycles = 0;
  std::uint64_t samples = 0;

  const auto emit = [&](std::uint64_t cycle, std::uint32_t array, Action a,
                        std::int64_t sample, std::uint32_t units) {
    rows.push_back({cycle, array, a, sample, units, detail::price(a, units, cost)});
    total_cycles = std::max(total_cycles, cycle + 1);
  };

  switch (plan.mode) {
    case TopologyMode::kPairSar: {
      if (cfg.mode != AdcMode::kSar)
        throw ConfigError("pair_sar plan needs a SAR adc config");
      std::int64_t sample = 0;
      for (std::size_t p = 0; p < plan.pairs.size(); ++p) {
        std::uint64_t t = 0;
        for (std::uint64_t s = 0; s < samples_per_slot; ++s, ++sample) {
          const std::uint32_t computer =
              s % 2 == 0 ? plan.pairs[p].first : plan.pairs[p].second;
          const std::uint32_t dac =
              s % 2 == 0 ? plan.pairs[p].second : plan.pairs[p].first;
          emit(t, computer, Action::kCompute, sample, 1);
          for (std::uint32_t k = 1; k <= b; ++k) {
            emit(t + k, dac, Action::kRefGen, sample,
                 detail::sar_cycle_toggles(cols, k));
            emit(t + k, computer, Action::kCompare, sample, 1);
          }
          t += 1 + b;
          ++samples;
        }
      }
      break;
    }
    case TopologyMode::kOneToManyFlash:
    case TopologyMode::kHybrid: {
      const bool hybrid = plan.mode == TopologyMode::kHybrid;
      if (hybrid && cfg.mode != AdcMode::kHybrid)
        throw ConfigError("hybrid plan needs a hybrid adc config");
      if (!hybrid && cfg.mode != AdcMode::kFlash)
        throw ConfigError("one_to_many_flash plan needs a flash adc config");
      const std::uint32_t m = cfg.flash_bits;
      if (plan.reference_arrays.size() != (1u << m) - 1)
        throw TopologyError("plan reference count does not match adc flash_bits");
      const std::uint32_t n_compute =
          static_cast<std::uint32_t>(plan.compute_arrays.size());
      const std::uint32_t n_refs =
          static_cast<std::uint32_t>(plan.reference_arrays.size());
      const std::uint32_t step = cols >> m;
      const std::uint32_t tail_len = hybrid ? b - m : 0;

      std::uint64_t t0 = 0;
      std::int64_t sample = 0;
      for (std::uint64_t batch = 0; batch < samples_per_slot; ++batch) {
        std::uint64_t batch_end = t0 + 1;
        std::vector<std::uint64_t> partner_free(n_refs, 0);
        for (std::uint32_t i = 0; i < n_compute; ++i)
          emit(t0, plan.compute_arrays[i], Action::kCompute, sample + i, 1);
        // flash references charge once per batch window, shared by all
        // compute arrays coupled to the bank
        for (std::uint32_t j = 0; j < n_refs; ++j)
          emit(t0 + 1, plan.reference_arrays[j], Action::kRefGen, -1,
               cols - (j + 1) * step);
        for (std::uint32_t i = 0; i < n_compute; ++i) {
          const std::uint64_t flash_cycle = t0 + 1 + i;  // bank serialized
          const std::int64_t s_id = sample + i;
          emit(flash_cycle, plan.compute_arrays[i], Action::kCompare, s_id,
               (1u << m) - 1);
          batch_end = std::max(batch_end, flash_cycle + 1);
          if (hybrid) {
            const std::uint32_t j = i % n_refs;
            const std::uint64_t start =
                std::max(flash_cycle + 1, partner_free[j]);
            for (std::uint32_t k = 0; k < tail_len; ++k) {
              emit(start + k, plan.reference_arrays[j], Action::kRefGen, s_id,
                   detail::sar_cycle_toggles(cols, m + 1 + k));
              emit(start + k, plan.compute_arrays[i], Action::kCompare, s_id, 1);
            }
            partner_free[j] = start + tail_len;
            batch_end = std::max(batch_end, start + tail_len);
          }
        }
        samples += n_compute;
        sample += n_compute;
        t0 = batch_end;
      }
      break;
    }
  }

  ScheduleReport rep;
  rep.trace = std::move(rows);
  rep.total_cycles = total_cycles;
  rep.samples_digitized = samples;
  rep.energy = tally_energy(rep.trace, cost);
  rep.per_array.assign(plan.n_arrays, {});

  std::vector<std::vector<std::uint8_t>> busy(
      plan.n_arrays, std::vector<std::uint8_t>(total_cycles, 0));
  for (const auto& row : rep.trace) {
    rep.per_array[row.array_id].energy += row.energy;
    if (row.action != Action::kIdle) busy[row.array_id][row.cycle] = 1;
  }
  // fill explicit idle rows so busy + idle = total per array
  for (std::uint32_t a = 0; a < plan.n_arrays; ++a) {
    for (std::uint64_t c = 0; c < total_cycles; ++c) {
      if (busy[a][c])
        ++rep.per_array[a].busy;
      else {
        ++rep.per_array[a].idle;
        rep.trace.push_back({c, a, Action::kIdle, -1, 0, 0.0});
      }
    }
  }
  std::sort(rep.trace.begin(), rep.trace.end(), [](const auto& x, const auto& y) {
    if (x.cycle != y.cycle) return x.cycle < y.cycle;
    if (x.array_id != y.array_id) return x.array_id < y.array_id;
    return static_cast<int>(x.action) < static_cast<int>(y.action);
  });

  rep.throughput = total_cycles == 0
                       ? 0.0
                       : static_cast<double>(samples) /
                             static_cast<double>(total_cycles);
  rep.wall_time_s = static_cast<double>(total_cycles) * cost.cycle_time;
  return rep;
}

struct LatencyRow {
  std::uint32_t bits = 0;
  std::uint32_t cycles = 0;
  std::uint32_t comparators = 0;
};

/// Cycles per conversion against bit precision. SAR trades cycles for a
/// single comparator; flash is single-cycle but its comparator count grows
/// exponentially; hybrid sits between.
inline std::vector<LatencyRow> latency_vs_precision(AdcMode mode,
                                                    std::uint32_t b_lo,
                                                    std::uint32_t b_hi,
                                                    std::uint32_t m = 2) {
  if (b_lo < 1 || b_hi > 8 || b_lo > b_hi)
    throw RangeError("latency_vs_precision: bits range must sit in 1..8");
  std::vector<LatencyRow> out;
  for (std::uint32_t b = b_lo; b <= b_hi; ++b) {
    LatencyRow row;
    row.bits = b;
    switch (mode) {
      case AdcMode::kSar:
        row.cycles = b;
        row.comparators = 1;
        break;
      case AdcMode::kFlash:
        row.cycles = 1;
        row.comparators = (1u << b) - 1;
        break;
      case AdcMode::kHybrid:
        if (m < 1 || m >= b)
          throw RangeError("latency_vs_precision: hybrid needs 1 <= m < b");
        row.cycles = 1 + (b - m);
        row.comparators = (1u << m) - 1;
        break;
      case AdcMode::kTree:
        throw RangeError("latency_vs_precision: tree latency is data-dependent");
    }
    out.push_back(row);
  }
  return out;
}

/// Trace rows as delimited text: cycle, array, action, sample, energy.
inline std::string export_trace_csv(const std::vector<TraceRow>& trace) {
  std::string out = "cycle,array_id,action,sample_id,energy\n";
  for (const auto& row : trace) {
    out += std::to_string(row.cycle);
    out += ',';
    out += std::to_string(row.array_id);
    out += ',';
    out += to_string(row.action);
    out += ',';
    out += std::to_string(row.sample_id);
    out += ',';
    out += fmt_double(row.energy);
    out += '\n';
  }
  return out;
}

}  // namespace cimsim
