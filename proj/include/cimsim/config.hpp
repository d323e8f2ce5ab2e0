#pragma once

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "cimsim/adc.hpp"
#include "cimsim/analog.hpp"
#include "cimsim/cost.hpp"
#include "cimsim/errors.hpp"
#include "cimsim/scheduler.hpp"

namespace cimsim {

enum class DistKind : std::uint8_t { kBinomial, kUniform };

inline const char* to_string(DistKind k) {
  return k == DistKind::kBinomial ? "binomial" : "uniform";
}

/// Full run configuration: flat key = value text with [sections], '#'
/// comments, unknown keys rejected. Defaults follow the 16x32 array,
/// 5-bit SAR, 25% discharge reference design.
struct RunConfig {
  ArrayGeometry geometry;
  AdcConfig adc;
  NonidealityParams nonideal;
  CostParams cost;

  DistKind dist_kind = DistKind::kBinomial;
  double p_discharge = 0.25;

  TopologyMode topology = TopologyMode::kPairSar;
  std::uint32_t n_arrays = 2;
  std::uint64_t samples = 1;

  std::uint32_t points_per_code = 64;

  std::string dataset_path;
  std::string model_path;
  std::uint32_t noise_seeds = 5;

  std::vector<double> sweep_mismatch_sigmas = {0.0, 0.005, 0.01, 0.02};
  std::vector<double> sweep_noise_sigmas_lsb = {0.0, 0.25, 0.5, 1.0};
  std::uint32_t sweep_trials = 20;

  std::uint64_t seed = 1;
  std::string out_dir = "out";

  // set during parsing; lets the CLI apply the seed precedence rule
  bool seed_from_file = false;

  void validate() const {
    geometry.validate();
    adc.validate(geometry.cols);
    nonideal.validate();
    cost.validate();
    if (p_discharge < 0.0 || p_discharge > 1.0)
      throw ConfigError("dist: p_discharge must be in [0,1]");
    if (points_per_code < 8)
      throw ConfigError("ramp: points_per_code must be >= 8");
    if (noise_seeds < 1) throw ConfigError("infer: noise_seeds must be >= 1");
    if (sweep_trials < 1) throw ConfigError("sweep: trials must be >= 1");
  }
};

namespace detail {

inline std::string shortest_double(double v) {
  char buf[64];
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

inline std::string join_doubles(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += shortest_double(v[i]);
  }
  return out;
}

struct ConfigValue {
  std::string text;
  int line = 0;

  [[noreturn]] void fail(const std::string& why) const {
    throw ConfigError("line " + std::to_string(line) + ": " + why + " (got '" +
                      text + "')");
  }

  double as_double() const {
    char* end = nullptr;
    const double v = std::strtod(text.c_str(), &end);
    if (text.empty() || end != text.c_str() + text.size())
      fail("expected a number");
    return v;
  }

  std::uint64_t as_u64() const {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(text.c_str(), &end, 10);
    if (text.empty() || end != text.c_str() + text.size())
      fail("expected an unsigned integer");
    return v;
  }

  std::uint32_t as_u32() const {
    const std::uint64_t v = as_u64();
    if (v > 0xffffffffull) fail("value too large");
    return static_cast<std::uint32_t>(v);
  }

  bool as_bool() const {
    if (text == "true") return true;
    if (text == "false") return false;
    fail("expected true or false");
  }

  std::vector<double> as_double_list() const {
    std::vector<double> out;
    std::string item;
    std::stringstream ss(text);
    while (std::getline(ss, item, ',')) {
      // trim
      while (!item.empty() && item.front() == ' ') item.erase(item.begin());
      while (!item.empty() && item.back() == ' ') item.pop_back();
      char* end = nullptr;
      const double v = std::strtod(item.c_str(), &end);
      if (item.empty() || end != item.c_str() + item.size())
        fail("expected a comma-separated number list");
      out.push_back(v);
    }
    if (out.empty()) fail("expected a nonempty list");
    return out;
  }

  AdcMode as_adc_mode() const {
    if (text == "sar") return AdcMode::kSar;
    if (text == "flash") return AdcMode::kFlash;
    if (text == "hybrid") return AdcMode::kHybrid;
    if (text == "tree") return AdcMode::kTree;
    fail("expected one of sar|flash|hybrid|tree");
  }

  TopologyMode as_topology() const {
    if (text == "pair_sar") return TopologyMode::kPairSar;
    if (text == "one_to_many_flash") return TopologyMode::kOneToManyFlash;
    if (text == "hybrid") return TopologyMode::kHybrid;
    fail("expected one of pair_sar|one_to_many_flash|hybrid");
  }

  DistKind as_dist_kind() const {
    if (text == "binomial") return DistKind::kBinomial;
    if (text == "uniform") return DistKind::kUniform;
    fail("expected one of binomial|uniform");
  }
};

}  // namespace detail

/// Canonical text form; parse_config_text(emit_config(c)) reproduces c.
inline std::string emit_config(const RunConfig& c) {
  using detail::shortest_double;
  std::ostringstream o;
  o << "[array]\n"
    << "rows = " << c.geometry.rows << "\n"
    << "cols = " << c.geometry.cols << "\n\n"
    << "[adc]\n"
    << "bits = " << c.adc.bits << "\n"
    << "mode = " << to_string(c.adc.mode) << "\n"
    << "flash_bits = " << c.adc.flash_bits << "\n"
    << "tolerant_bubbles = " << (c.adc.tolerant_bubbles ? "true" : "false")
    << "\n\n"
    << "[nonideal]\n"
    << "cap_mismatch_sigma = " << shortest_double(c.nonideal.cap_mismatch_sigma)
    << "\n"
    << "parasitic_frac = " << shortest_double(c.nonideal.parasitic_frac) << "\n"
    << "comparator_offset = " << shortest_double(c.nonideal.comparator_offset)
    << "\n"
    << "comparator_noise_sigma = "
    << shortest_double(c.nonideal.comparator_noise_sigma) << "\n\n"
    << "[cost]\n"
    << "e_precharge = " << shortest_double(c.cost.e_precharge) << "\n"
    << "e_compare = " << shortest_double(c.cost.e_compare) << "\n"
    << "e_merge = " << shortest_double(c.cost.e_merge) << "\n"
    << "cycle_time = " << shortest_double(c.cost.cycle_time) << "\n\n"
    << "[dist]\n"
    << "kind = " << to_string(c.dist_kind) << "\n"
    << "p_discharge = " << shortest_double(c.p_discharge) << "\n\n"
    << "[fabric]\n"
    << "topology = " << to_string(c.topology) << "\n"
    << "n_arrays = " << c.n_arrays << "\n"
    << "samples = " << c.samples << "\n\n"
    << "[ramp]\n"
    << "points_per_code = " << c.points_per_code << "\n\n"
    << "[infer]\n"
    << "dataset = " << c.dataset_path << "\n"
    << "model = " << c.model_path << "\n"
    << "noise_seeds = " << c.noise_seeds << "\n\n"
    << "[sweep]\n"
    << "mismatch_sigmas = " << detail::join_doubles(c.sweep_mismatch_sigmas)
    << "\n"
    << "noise_sigmas_lsb = " << detail::join_doubles(c.sweep_noise_sigmas_lsb)
    << "\n"
    << "trials = " << c.sweep_trials << "\n\n"
    << "[run]\n"
    << "seed = " << c.seed << "\n"
    << "out_dir = " << c.out_dir << "\n";
  return o.str();
}

inline RunConfig parse_config_text(std::string_view text) {
  RunConfig cfg;
  std::string section;
  int line_no = 0;
  std::size_t pos = 0;

  while (pos <= text.size()) {
    const std::size_t eol = text.find('\n', pos);
    std::string line(text.substr(pos, eol == std::string_view::npos
                                          ? std::string_view::npos
                                          : eol - pos));
    pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
    ++line_no;

    if (const auto hash = line.find('#'); hash != std::string::npos)
      line.erase(hash);
    while (!line.empty() && (line.back() == ' ' || line.back() == '\r' ||
                             line.back() == '\t'))
      line.pop_back();
    std::size_t start = 0;
    while (start < line.size() && (line[start] == ' ' || line[start] == '\t'))
      ++start;
    line.erase(0, start);
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError("line " + std::to_string(line_no) +
                          ": malformed section header");
      section = line.substr(1, line.size() - 2);
      if (section != "array" && section != "adc" && section != "nonideal" &&
          section != "cost" && section != "dist" && section != "fabric" &&
          section != "ramp" && section != "infer" && section != "sweep" &&
          section != "run")
        throw ConfigError("line " + std::to_string(line_no) +
                          ": unknown section [" + section + "]");
      continue;
    }

    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(line_no) +
                        ": expected key = value");
    std::string key = line.substr(0, eq);
    std::string value = line.substr(eq + 1);
    while (!key.empty() && (key.back() == ' ' || key.back() == '\t'))
      key.pop_back();
    std::size_t vs = 0;
    while (vs < value.size() && (value[vs] == ' ' || value[vs] == '\t')) ++vs;
    value.erase(0, vs);

    const detail::ConfigValue v{value, line_no};
    const std::string qual = section + "." + key;

    if (qual == "array.rows") cfg.geometry.rows = v.as_u32();
    else if (qual == "array.cols") cfg.geometry.cols = v.as_u32();
    else if (qual == "adc.bits") cfg.adc.bits = v.as_u32();
    else if (qual == "adc.mode") cfg.adc.mode = v.as_adc_mode();
    else if (qual == "adc.flash_bits") cfg.adc.flash_bits = v.as_u32();
    else if (qual == "adc.tolerant_bubbles") cfg.adc.tolerant_bubbles = v.as_bool();
    else if (qual == "nonideal.cap_mismatch_sigma") cfg.nonideal.cap_mismatch_sigma = v.as_double();
    else if (qual == "nonideal.parasitic_frac") cfg.nonideal.parasitic_frac = v.as_double();
    else if (qual == "nonideal.comparator_offset") cfg.nonideal.comparator_offset = v.as_double();
    else if (qual == "nonideal.comparator_noise_sigma") cfg.nonideal.comparator_noise_sigma = v.as_double();
    else if (qual == "cost.e_precharge") cfg.cost.e_precharge = v.as_double();
    else if (qual == "cost.e_compare") cfg.cost.e_compare = v.as_double();
    else if (qual == "cost.e_merge") cfg.cost.e_merge = v.as_double();
    else if (qual == "cost.cycle_time") cfg.cost.cycle_time = v.as_double();
    else if (qual == "dist.kind") cfg.dist_kind = v.as_dist_kind();
    else if (qual == "dist.p_discharge") cfg.p_discharge = v.as_double();
    else if (qual == "fabric.topology") cfg.topology = v.as_topology();
    else if (qual == "fabric.n_arrays") cfg.n_arrays = v.as_u32();
    else if (qual == "fabric.samples") cfg.samples = v.as_u64();
    else if (qual == "ramp.points_per_code") cfg.points_per_code = v.as_u32();
    else if (qual == "infer.dataset") cfg.dataset_path = value;
    else if (qual == "infer.model") cfg.model_path = value;
    else if (qual == "infer.noise_seeds") cfg.noise_seeds = v.as_u32();
    else if (qual == "sweep.mismatch_sigmas") cfg.sweep_mismatch_sigmas = v.as_double_list();
    else if (qual == "sweep.noise_sigmas_lsb") cfg.sweep_noise_sigmas_lsb = v.as_double_list();
    else if (qual == "sweep.trials") cfg.sweep_trials = v.as_u32();
    else if (qual == "run.seed") { cfg.seed = v.as_u64(); cfg.seed_from_file = true; }
    else if (qual == "run.out_dir") cfg.out_dir = value;
    else
      throw ConfigError("line " + std::to_string(line_no) + ": unknown key '" +
                        key + "' in section [" + section + "]");
  }

  cfg.nonideal.seed = cfg.seed;
  cfg.validate();
  return cfg;
}

inline RunConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

/// FNV-1a over the canonical config text; platform-independent. The output
/// directory is stripped first: the hash identifies the experiment, not
/// where its reports land.
inline std::uint64_t config_hash(const RunConfig& cfg) {
  std::string text = emit_config(cfg);
  const auto pos = text.find("out_dir = ");
  if (pos != std::string::npos) {
    const auto eol = text.find('\n', pos);
    text.erase(pos, eol == std::string::npos ? std::string::npos
                                             : eol - pos + 1);
  }
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::string config_hash_hex(const RunConfig& cfg) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(config_hash(cfg)));
  return buf;
}

inline bool operator==(const RunConfig& a, const RunConfig& b) {
  return emit_config(a) == emit_config(b) && a.seed == b.seed;
}

}  // namespace cimsim
