#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "cimsim/adc.hpp"
#include "cimsim/analog.hpp"
#include "cimsim/chain.hpp"
#include "cimsim/cost.hpp"
#include "cimsim/errors.hpp"
#include "cimsim/rng.hpp"

namespace cimsim {

/// One quantized fully connected layer. Weights are unsigned B_w-bit values
/// with a common zero point (signedness is recovered digitally, the cells
/// only ever store nonnegative bits). `out_shift` rescales this layer's
/// ReLU output into the next layer's B_x-bit input range.
struct QuantizedLayer {
  std::uint32_t in_dim = 0;
  std::uint32_t out_dim = 0;
  std::uint32_t weight_bits = 1;  // B_w
  std::uint32_t input_bits = 1;   // B_x expected on this layer's input
  std::uint32_t zero_point = 0;
  std::uint32_t out_shift = 0;
  std::vector<std::uint32_t> weights;  // out_dim x in_dim, row-major

  std::uint32_t weight(std::uint32_t n, std::uint32_t i) const {
    return weights[static_cast<std::size_t>(n) * in_dim + i];
  }

  void validate() const {
    if (in_dim == 0 || out_dim == 0) throw ConfigError("layer: empty dims");
    if (weight_bits < 1 || weight_bits > 4 || input_bits < 1 || input_bits > 4)
      throw ConfigError("layer: weight/input bits must sit in 1..4");
    if (weights.size() != static_cast<std::size_t>(in_dim) * out_dim)
      throw ShapeError("layer: weight matrix shape mismatch");
    for (std::uint32_t w : weights)
      if (w >= (1u << weight_bits))
        throw RangeError("layer: weight exceeds its bit width");
    if (zero_point >= (1u << weight_bits))
      throw RangeError("layer: zero point exceeds weight width");
  }
};

struct MlpModel {
  std::vector<QuantizedLayer> layers;

  void validate() const {
    if (layers.empty() || layers.size() > 2)
      throw ConfigError("model: expected 1 or 2 layers");
    for (const auto& l : layers) l.validate();
    for (std::size_t i = 1; i < layers.size(); ++i)
      if (layers[i].in_dim != layers[i - 1].out_dim)
        throw ShapeError("model: layer dimension chain broken");
  }
};

struct Dataset {
  std::uint32_t n_samples = 0, height = 0, width = 0, classes = 0;
  std::vector<std::vector<std::uint32_t>> pixels;  // row-major per sample
  std::vector<std::uint32_t> labels;
};

/// Pure-integer matrix-vector product; ground truth for every fabric test.
inline std::vector<std::int64_t> reference_matvec(
    std::span<const std::uint32_t> input, const QuantizedLayer& layer) {
  layer.validate();
  if (input.size() != layer.in_dim)
    throw ShapeError("reference_matvec: input length mismatch");
  std::int64_t in_sum = 0;
  for (std::uint32_t x : input) in_sum += x;
  std::vector<std::int64_t> out(layer.out_dim, 0);
  for (std::uint32_t n = 0; n < layer.out_dim; ++n) {
    std::int64_t acc = 0;
    for (std::uint32_t i = 0; i < layer.in_dim; ++i)
      acc += static_cast<std::int64_t>(layer.weight(n, i)) * input[i];
    out[n] = acc - static_cast<std::int64_t>(layer.zero_point) * in_sum;
  }
  return out;
}

/// Mapping of one layer onto array tiles. Dot products wider than the active
/// column budget split across column chunks whose digitized partial sums add
/// digitally; each logical neuron occupies weight_bits stored rows (one per
/// weight-bit significance).
struct TilePlan {
  struct Tile {
    std::uint32_t id = 0;
    std::uint32_t neuron_lo = 0, neuron_hi = 0;  // [lo, hi)
    std::uint32_t col_lo = 0, col_hi = 0;        // [lo, hi)
    std::vector<std::uint8_t> row_significance;  // per stored row
  };
  std::vector<Tile> tiles;
  std::uint32_t active_budget = 0;  // columns usable per MAC, 2^bits - 1
  std::uint32_t neurons_per_tile = 0;
};

inline TilePlan tile_layer(const QuantizedLayer& layer,
                           const ArrayGeometry& geometry, std::uint32_t bits) {
  layer.validate();
  geometry.validate();
  if ((1u << bits) > geometry.cols)
    throw ConfigError("tile_layer: 2^bits exceeds array columns");

  TilePlan plan;
  // one column stays grounded so code -> count recovery is bijective
  plan.active_budget = (1u << bits) - 1;
  plan.neurons_per_tile = geometry.rows / layer.weight_bits;
  if (plan.neurons_per_tile == 0)
    throw CapacityError("tile_layer: weight_bits exceeds array rows");

  std::uint32_t id = 0;
  for (std::uint32_t n0 = 0; n0 < layer.out_dim; n0 += plan.neurons_per_tile) {
    const std::uint32_t n1 = std::min(layer.out_dim, n0 + plan.neurons_per_tile);
    for (std::uint32_t c0 = 0; c0 < layer.in_dim; c0 += plan.active_budget) {
      const std::uint32_t c1 = std::min(layer.in_dim, c0 + plan.active_budget);
      TilePlan::Tile tile;
      tile.id = id++;
      tile.neuron_lo = n0;
      tile.neuron_hi = n1;
      tile.col_lo = c0;
      tile.col_hi = c1;
      for (std::uint32_t n = n0; n < n1; ++n)
        for (std::uint32_t s = 0; s < layer.weight_bits; ++s)
          tile.row_significance.push_back(static_cast<std::uint8_t>(s));
      plan.tiles.push_back(std::move(tile));
    }
  }
  return plan;
}

/// Everything needed to stand up the simulated fabric for one layer MAC.
struct CimFabric {
  ArrayGeometry geometry;
  AdcConfig adc;
  NonidealityParams nonideal;
  CostParams cost;
};

struct MatvecStats {
  double energy = 0.0;
  std::uint64_t cycles = 0;
  std::uint64_t digitizations = 0;
  std::uint64_t saturations = 0;
  std::vector<std::uint32_t>* code_sink = nullptr;  // optional MAV code tap
};

/// Bit-serial matrix-vector product on the simulated fabric: per tile, per
/// input bit plane, per stored row, the column products are charge-shared,
/// digitized, and the codes recombined as
///
///   out[n] = sum_{plane, sig} 2^(plane + sig) * code  -  zero_point * sum(x)
///
/// Under ideal conditions this is bit-exact against reference_matvec as long
/// as the active column budget is respected.
inline std::vector<std::int64_t> cim_matvec(std::span<const std::uint32_t> input,
                                            const TilePlan& plan,
                                            const QuantizedLayer& layer,
                                            const CimFabric& fabric,
                                            std::uint64_t noise_stream = 0,
                                            MatvecStats* stats = nullptr) {
  layer.validate();
  if (input.size() != layer.in_dim)
    throw ShapeError("cim_matvec: input length mismatch");
  for (std::uint32_t x : input)
    if (x >= (1u << layer.input_bits))
      throw ArgumentError("cim_matvec: input exceeds its bit width");

  const AdcChain chain = AdcChain::make(fabric.geometry, fabric.adc,
                                        fabric.nonideal, std::nullopt,
                                        fabric.cost);
  const std::uint32_t cols = fabric.geometry.cols;
  const std::uint32_t top_code = (1u << fabric.adc.bits) - 1;

  std::vector<std::int64_t> out(layer.out_dim, 0);
  std::uint32_t counter = 0;
  for (const auto& tile : plan.tiles) {
    CimArrayState array = CimArrayState::make(fabric.geometry);
    NonidealityParams tile_params = fabric.nonideal;
    tile_params.seed = derive_seed(fabric.nonideal.seed, 0x700 + tile.id);
    array.caps = draw_mismatch(fabric.geometry, tile_params);

    const std::uint32_t chunk = tile.col_hi - tile.col_lo;
    for (std::uint32_t r = 0; r < tile.row_significance.size(); ++r) {
      const std::uint32_t neuron = tile.neuron_lo + r / layer.weight_bits;
      const std::uint32_t sig = tile.row_significance[r];
      for (std::uint32_t c = 0; c < chunk; ++c)
        array.set_weight(r, c, (layer.weight(neuron, tile.col_lo + c) >> sig) & 1u);
    }

    std::vector<std::uint8_t> plane_bits(cols, 0);
    for (std::uint32_t plane = 0; plane < layer.input_bits; ++plane) {
      for (std::uint32_t c = 0; c < cols; ++c)
        plane_bits[c] =
            c < chunk ? ((input[tile.col_lo + c] >> plane) & 1u) : 0u;
      for (std::uint32_t r = 0; r < tile.row_significance.size(); ++r) {
        const std::uint32_t neuron = tile.neuron_lo + r / layer.weight_bits;
        const std::uint32_t sig = tile.row_significance[r];
        const auto flags = column_products(array, r, plane_bits);
        std::uint32_t k = 0;
        for (std::uint8_t f : flags) k += f;
        const NormalizedVoltage v = charge_share_mav(flags, array.caps);
        const DigitizationResult res =
            chain.digitize(NormalizedVoltage{1.0 - v.value},
                           (noise_stream << 32) | counter++);
        out[neuron] += static_cast<std::int64_t>(res.code) << (plane + sig);
        if (stats) {
          if (k > top_code) ++stats->saturations;
          stats->energy += fabric.cost.e_merge + res.energy;
          stats->cycles += 1 + res.cycles;
          ++stats->digitizations;
          if (stats->code_sink) stats->code_sink->push_back(res.code);
        }
      }
    }
  }

  std::int64_t in_sum = 0;
  for (std::uint32_t x : input) in_sum += x;
  for (auto& y : out) y -= static_cast<std::int64_t>(layer.zero_point) * in_sum;
  return out;
}

struct InferenceReport {
  std::uint32_t n_samples = 0;
  std::uint32_t correct = 0;
  double accuracy = 0.0;
  double energy = 0.0;
  std::uint64_t cycles = 0;
  std::uint64_t saturations = 0;
  std::vector<std::uint32_t> predictions;
  std::vector<std::vector<std::int64_t>> logits;
};

namespace detail {

/// ReLU then rescale into the next layer's input range. The same rule runs
/// on both the fabric and the oracle path, so equivalence tests compare the
/// whole pipeline.
inline std::vector<std::uint32_t> requantize_activation(
    const std::vector<std::int64_t>& y, std::uint32_t out_shift,
    std::uint32_t next_input_bits) {
  const std::int64_t top = (1u << next_input_bits) - 1;
  std::vector<std::uint32_t> act(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    std::int64_t v = std::max<std::int64_t>(y[i], 0) >> out_shift;
    act[i] = static_cast<std::uint32_t>(std::min(v, top));
  }
  return act;
}

}  // namespace detail

/// Runs the model over the dataset, on the fabric or on the integer oracle.
/// Deterministic per seed; sample lanes use derived noise streams so they
/// are order-independent.
inline InferenceReport run_inference(const MlpModel& model, const Dataset& data,
                                     const CimFabric& fabric, std::uint64_t seed,
                                     bool use_fabric = true,
                                     std::vector<std::uint32_t>* code_sink = nullptr) {
  model.validate();
  if (data.n_samples == 0) throw IngestionError("run_inference: empty dataset");

  CimFabric fab = fabric;
  fab.nonideal.seed = derive_seed(seed, 0x1F);

  std::vector<TilePlan> plans;
  for (const auto& layer : model.layers)
    plans.push_back(tile_layer(layer, fab.geometry, fab.adc.bits));

  InferenceReport rep;
  rep.n_samples = data.n_samples;
  MatvecStats stats;
  stats.code_sink = code_sink;

  for (std::uint32_t s = 0; s < data.n_samples; ++s) {
    std::vector<std::uint32_t> act = data.pixels[s];
    std::vector<std::int64_t> y;
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
      const QuantizedLayer& layer = model.layers[l];
      if (act.size() != layer.in_dim)
        throw ShapeError("run_inference: activation width mismatch");
      for (std::uint32_t v : act)
        if (v >= (1u << layer.input_bits))
          throw IngestionError("run_inference: input exceeds layer input bits");
      if (use_fabric) {
        const std::uint64_t stream = (static_cast<std::uint64_t>(s) << 8) | l;
        y = cim_matvec(act, plans[l], layer, fab, stream, &stats);
      } else {
        y = reference_matvec(act, layer);
      }
      if (l + 1 < model.layers.size())
        act = detail::requantize_activation(y, layer.out_shift,
                                            model.layers[l + 1].input_bits);
    }
    const std::uint32_t pred = static_cast<std::uint32_t>(
        std::max_element(y.begin(), y.end()) - y.begin());
    rep.predictions.push_back(pred);
    rep.logits.push_back(std::move(y));
    if (pred == data.labels[s]) ++rep.correct;
  }

  rep.accuracy = static_cast<double>(rep.correct) / rep.n_samples;
  rep.energy = stats.energy;
  rep.cycles = stats.cycles;
  rep.saturations = stats.saturations;
  return rep;
}

// ---------------------------------------------------------------------------
// Dataset / model files. Both are whitespace-separated token streams with
// '#' line comments and a magic tag:
//
//   cimsim-dataset v1
//   <n_samples> <height> <width> <classes>
//   per sample: height*width pixel integers (row-major), then the label
//
//   cimsim-model v1
//   <n_layers>
//   per layer: <in_dim> <out_dim> <weight_bits> <input_bits> <zero_point>
//              <out_shift>, then out_dim*in_dim weights (row-major)

namespace detail {

class TokenReader {
 public:
  explicit TokenReader(std::istream& in) : in_(in) {}

  std::string next(const char* what) {
    std::string tok;
    while (in_ >> tok) {
      if (tok[0] == '#') {
        std::string rest;
        std::getline(in_, rest);
        continue;
      }
      return tok;
    }
    throw IngestionError(std::string("unexpected end of file, expected ") + what);
  }

  std::uint32_t next_u32(const char* what) {
    const std::string tok = next(what);
    try {
      std::size_t used = 0;
      const unsigned long v = std::stoul(tok, &used);
      if (used != tok.size() || v > 0xffffffffull) throw std::invalid_argument(tok);
      return static_cast<std::uint32_t>(v);
    } catch (const std::exception&) {
      throw IngestionError(std::string("expected integer for ") + what +
                           ", got '" + tok + "'");
    }
  }

 private:
  std::istream& in_;
};

}  // namespace detail

inline Dataset load_dataset(std::istream& in) {
  detail::TokenReader rd(in);
  if (rd.next("magic") != "cimsim-dataset" || rd.next("version") != "v1")
    throw IngestionError("not a cimsim-dataset v1 file");
  Dataset d;
  d.n_samples = rd.next_u32("n_samples");
  d.height = rd.next_u32("height");
  d.width = rd.next_u32("width");
  d.classes = rd.next_u32("classes");
  if (d.n_samples == 0 || d.height == 0 || d.width == 0 || d.classes == 0)
    throw IngestionError("dataset: zero-sized header field");
  for (std::uint32_t s = 0; s < d.n_samples; ++s) {
    std::vector<std::uint32_t> px(d.height * d.width);
    for (auto& p : px) {
      p = rd.next_u32("pixel");
      if (p >= 16) throw IngestionError("dataset: pixel exceeds 4-bit range");
    }
    const std::uint32_t label = rd.next_u32("label");
    if (label >= d.classes) throw IngestionError("dataset: label out of range");
    d.pixels.push_back(std::move(px));
    d.labels.push_back(label);
  }
  return d;
}

inline Dataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dataset file: " + path);
  return load_dataset(in);
}

inline MlpModel load_model(std::istream& in) {
  detail::TokenReader rd(in);
  if (rd.next("magic") != "cimsim-model" || rd.next("version") != "v1")
    throw IngestionError("not a cimsim-model v1 file");
  MlpModel model;
  const std::uint32_t n_layers = rd.next_u32("n_layers");
  for (std::uint32_t l = 0; l < n_layers; ++l) {
    QuantizedLayer layer;
    layer.in_dim = rd.next_u32("in_dim");
    layer.out_dim = rd.next_u32("out_dim");
    layer.weight_bits = rd.next_u32("weight_bits");
    layer.input_bits = rd.next_u32("input_bits");
    layer.zero_point = rd.next_u32("zero_point");
    layer.out_shift = rd.next_u32("out_shift");
    layer.weights.resize(static_cast<std::size_t>(layer.in_dim) * layer.out_dim);
    for (auto& w : layer.weights) w = rd.next_u32("weight");
    model.layers.push_back(std::move(layer));
  }
  try {
    model.validate();
  } catch (const Error& e) {
    throw IngestionError(std::string("model file invalid: ") + e.what());
  }
  return model;
}

inline MlpModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open model file: " + path);
  return load_model(in);
}

inline std::string save_dataset(const Dataset& d) {
  std::ostringstream out;
  out << "cimsim-dataset v1\n"
      << d.n_samples << ' ' << d.height << ' ' << d.width << ' ' << d.classes
      << '\n';
  for (std::uint32_t s = 0; s < d.n_samples; ++s) {
    for (std::uint32_t i = 0; i < d.height * d.width; ++i)
      out << d.pixels[s][i] << ((i + 1) % d.width == 0 ? '\n' : ' ');
    out << d.labels[s] << '\n';
  }
  return out.str();
}

inline std::string save_model(const MlpModel& m) {
  std::ostringstream out;
  out << "cimsim-model v1\n" << m.layers.size() << '\n';
  for (const auto& l : m.layers) {
    out << l.in_dim << ' ' << l.out_dim << ' ' << l.weight_bits << ' '
        << l.input_bits << ' ' << l.zero_point << ' ' << l.out_shift << '\n';
    for (std::uint32_t n = 0; n < l.out_dim; ++n) {
      for (std::uint32_t i = 0; i < l.in_dim; ++i)
        out << l.weight(n, i) << (i + 1 == l.in_dim ? '\n' : ' ');
    }
  }
  return out.str();
}

}  // namespace cimsim
