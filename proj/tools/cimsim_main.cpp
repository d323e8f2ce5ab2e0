// cimsim command-line front end: single conversions, ramp linearity, search
// tree construction, fabric schedules, quantized inference, and parameter
// sweeps. All numeric outputs land in report files keyed by the config hash.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cimsim/cimsim.hpp"

namespace fs = std::filesystem;
using namespace cimsim;

namespace {

struct CliOverrides {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint32_t> bits;
  std::optional<std::string> mode;
  std::optional<std::string> out_dir;
};

AdcMode parse_mode_name(const std::string& name) {
  if (name == "sar") return AdcMode::kSar;
  if (name == "flash") return AdcMode::kFlash;
  if (name == "hybrid") return AdcMode::kHybrid;
  if (name == "tree") return AdcMode::kTree;
  throw ConfigError("unknown mode '" + name + "'");
}

RunConfig resolve_config(const CliOverrides& ov) {
  RunConfig cfg;
  if (!ov.config_path.empty()) cfg = parse_config(ov.config_path);

  // seed precedence: flag > config file > CIMSIM_SEED env > default
  if (ov.seed) {
    cfg.seed = *ov.seed;
  } else if (!cfg.seed_from_file) {
    if (const char* env = std::getenv("CIMSIM_SEED")) {
      char* end = nullptr;
      const unsigned long long v = std::strtoull(env, &end, 10);
      if (end == env || *end != '\0')
        throw ConfigError("CIMSIM_SEED is not an unsigned integer");
      cfg.seed = v;
    }
  }
  if (ov.bits) cfg.adc.bits = *ov.bits;
  if (ov.mode) {
    cfg.adc.mode = parse_mode_name(*ov.mode);
    if (cfg.adc.mode == AdcMode::kFlash) cfg.adc.flash_bits = cfg.adc.bits;
  }
  if (ov.out_dir) cfg.out_dir = *ov.out_dir;
  cfg.nonideal.seed = cfg.seed;
  cfg.validate();
  return cfg;
}

MavDistribution dist_from_config(const RunConfig& cfg) {
  if (cfg.dist_kind == DistKind::kUniform)
    return mav_distribution_uniform(cfg.adc.bits);
  return mav_distribution_binomial(cfg.geometry.cols, cfg.p_discharge,
                                   cfg.adc.bits);
}

AdcChain chain_from_config(const RunConfig& cfg) {
  std::optional<SearchTree> tree;
  if (cfg.adc.mode == AdcMode::kTree)
    tree = build_optimal_tree(dist_from_config(cfg));
  return AdcChain::make(cfg.geometry, cfg.adc, cfg.nonideal, std::move(tree),
                        cfg.cost);
}

void prepare_out_dir(const RunConfig& cfg) {
  if (!cfg.out_dir.empty()) fs::create_directories(cfg.out_dir);
}

std::string out_path(const RunConfig& cfg, const std::string& name) {
  return (fs::path(cfg.out_dir) / name).string();
}

void add_common(std::vector<ReportRecord>& records, const std::string& exp,
                const RunConfig& cfg) {
  records.push_back({exp, config_hash_hex(cfg), "seed",
                     static_cast<double>(cfg.seed), "count"});
}

int cmd_digitize(const RunConfig& cfg, std::vector<double> xs,
                 std::uint32_t n_random) {
  prepare_out_dir(cfg);
  const auto chain = chain_from_config(cfg);
  SplitMix64 rng(derive_seed(cfg.seed, 0xD16));
  for (std::uint32_t i = 0; i < n_random; ++i) xs.push_back(rng.next_unit());
  if (xs.empty()) throw ArgumentError("digitize: no inputs (use --x or --count)");

  std::vector<ReportRecord> records;
  add_common(records, "digitize", cfg);
  std::string trace_csv = "conversion,cycle,p,bit,mode\n";
  double total_comparisons = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (xs[i] < 0.0 || xs[i] > 1.0)
      throw ArgumentError("digitize: x must lie in [0,1]");
    const auto res = chain.digitize({xs[i]}, i);
    std::cout << "x=" << fmt_double(xs[i]) << " code=" << res.code << " bits=";
    for (auto b : res.bits_msb_first) std::cout << int(b);
    std::cout << " comparisons=" << res.comparisons << " cycles=" << res.cycles
              << " energy=" << fmt_double(res.energy) << "\n";
    for (const auto& t : res.trace) {
      trace_csv += std::to_string(i) + ',' + std::to_string(t.cycle) + ',' +
                   std::to_string(t.p) + ',' + std::to_string(t.bit) + ',' +
                   to_string(t.mode);
      trace_csv += '\n';
    }
    records.push_back({"digitize", config_hash_hex(cfg),
                       "code_x" + fmt_double(xs[i]),
                       static_cast<double>(res.code), "code"});
    total_comparisons += res.comparisons;
  }
  records.push_back({"digitize", config_hash_hex(cfg), "mean_comparisons",
                     total_comparisons / xs.size(), "comparisons"});
  write_text_file(out_path(cfg, "digitize_trace.csv"), trace_csv);
  emit_reports(records, out_path(cfg, "digitize_report"));
  return 0;
}

int cmd_ramp(const RunConfig& cfg) {
  prepare_out_dir(cfg);
  const auto chain = chain_from_config(cfg);
  const auto stair = ramp_test(chain, cfg.points_per_code);
  const auto rep = dnl_inl(stair);

  std::string stair_csv = "x,code\n";
  for (std::size_t i = 0; i < stair.x.size(); ++i) {
    stair_csv += fmt_double(stair.x[i], 17);
    stair_csv += ',';
    stair_csv += std::to_string(stair.code[i]);
    stair_csv += '\n';
  }
  write_text_file(out_path(cfg, "staircase.csv"), stair_csv);

  std::string lin_csv = "code,dnl,inl\n";
  for (std::size_t c = 0; c < rep.dnl.size(); ++c) {
    lin_csv += std::to_string(c);
    lin_csv += ',';
    lin_csv += fmt_double(rep.dnl[c]);
    lin_csv += ',';
    lin_csv += fmt_double(rep.inl[c]);
    lin_csv += '\n';
  }
  write_text_file(out_path(cfg, "linearity.csv"), lin_csv);

  std::vector<ReportRecord> records;
  add_common(records, "ramp", cfg);
  const auto hash = config_hash_hex(cfg);
  records.push_back({"ramp", hash, "max_abs_dnl", rep.max_abs_dnl, "LSB"});
  records.push_back({"ramp", hash, "max_abs_inl", rep.max_abs_inl, "LSB"});
  records.push_back({"ramp", hash, "missing_codes",
                     static_cast<double>(rep.missing_codes.size()), "count"});
  emit_reports(records, out_path(cfg, "ramp_report"));

  std::cout << "max_abs_dnl=" << fmt_double(rep.max_abs_dnl)
            << " max_abs_inl=" << fmt_double(rep.max_abs_inl)
            << " missing_codes=" << rep.missing_codes.size() << "\n";
  return 0;
}

int cmd_tree(const RunConfig& cfg, const std::string& import_path) {
  prepare_out_dir(cfg);
  const auto dist = dist_from_config(cfg);
  SearchTree tree;
  if (!import_path.empty()) {
    std::ifstream in(import_path);
    if (!in) throw IoError("cannot open tree file: " + import_path);
    std::ostringstream buf;
    buf << in.rdbuf();
    tree = parse_tree(buf.str());
  } else {
    tree = build_optimal_tree(dist);
  }
  const double expected = expected_comparisons(tree, dist);
  const double balanced = expected_comparisons(SearchTree::balanced(cfg.adc.bits), dist);
  const double entropy = distribution_entropy_bits(dist);

  const std::string serialized = serialize_tree(tree);
  write_text_file(out_path(cfg, "tree.txt"), serialized + "\n");

  std::vector<ReportRecord> records;
  add_common(records, "tree", cfg);
  const auto hash = config_hash_hex(cfg);
  records.push_back({"tree", hash, "expected_comparisons", expected, "comparisons"});
  records.push_back({"tree", hash, "balanced_comparisons", balanced, "comparisons"});
  records.push_back({"tree", hash, "entropy", entropy, "bits"});
  emit_reports(records, out_path(cfg, "tree_report"));

  std::cout << "expected_comparisons=" << fmt_double(expected)
            << " balanced=" << fmt_double(balanced)
            << " entropy_bits=" << fmt_double(entropy) << "\n"
            << serialized << "\n";
  return 0;
}

int cmd_schedule(const RunConfig& cfg) {
  prepare_out_dir(cfg);
  AdcConfig adc = cfg.adc;
  // the plan dictates the digitization style; a pure flash fabric resolves
  // all bits in its flash window
  switch (cfg.topology) {
    case TopologyMode::kPairSar: adc.mode = AdcMode::kSar; break;
    case TopologyMode::kOneToManyFlash:
      adc.mode = AdcMode::kFlash;
      adc.flash_bits = adc.bits;
      break;
    case TopologyMode::kHybrid: adc.mode = AdcMode::kHybrid; break;
  }
  adc.validate(cfg.geometry.cols);
  const auto plan = build_topology(
      cfg.n_arrays, cfg.topology,
      cfg.topology == TopologyMode::kOneToManyFlash ? adc.bits
                                                    : adc.flash_bits);
  const auto rep = simulate_schedule(plan, cfg.samples, adc, cfg.cost,
                                     cfg.geometry.cols);
  write_text_file(out_path(cfg, "schedule_trace.csv"), export_trace_csv(rep.trace));

  std::vector<ReportRecord> records;
  add_common(records, "schedule", cfg);
  const auto hash = config_hash_hex(cfg);
  records.push_back({"schedule", hash, "total_cycles",
                     static_cast<double>(rep.total_cycles), "cycles"});
  records.push_back({"schedule", hash, "samples",
                     static_cast<double>(rep.samples_digitized), "count"});
  records.push_back({"schedule", hash, "throughput", rep.throughput,
                     "samples/cycle"});
  records.push_back({"schedule", hash, "energy_ref_gen",
                     rep.energy.reference_generation, "CuVdd2"});
  records.push_back({"schedule", hash, "energy_ref_gen_shared",
                     rep.energy.reference_generation_shared, "CuVdd2"});
  records.push_back({"schedule", hash, "energy_comparisons",
                     rep.energy.comparisons, "CuVdd2"});
  records.push_back({"schedule", hash, "energy_merges", rep.energy.merges,
                     "CuVdd2"});
  records.push_back({"schedule", hash, "energy_total", rep.energy.total(),
                     "CuVdd2"});
  records.push_back({"schedule", hash, "wall_time", rep.wall_time_s, "s"});
  emit_reports(records, out_path(cfg, "schedule_report"));

  std::cout << "total_cycles=" << rep.total_cycles
            << " samples=" << rep.samples_digitized
            << " energy_total=" << fmt_double(rep.energy.total()) << "\n";
  return 0;
}

int cmd_infer(const RunConfig& cfg, bool collect_codes) {
  prepare_out_dir(cfg);
  const std::string dataset_path =
      cfg.dataset_path.empty() ? "data/digits8x8_b1.txt" : cfg.dataset_path;
  const std::string model_path =
      cfg.model_path.empty() ? "data/model_1layer_b1.txt" : cfg.model_path;
  const auto data = load_dataset(dataset_path);
  const auto model = load_model(model_path);

  CimFabric fabric{cfg.geometry, cfg.adc, cfg.nonideal, cfg.cost};
  std::vector<std::uint32_t> codes;
  const auto rep = run_inference(model, data, fabric, cfg.seed, true,
                                 collect_codes ? &codes : nullptr);

  std::vector<ReportRecord> records;
  add_common(records, "infer", cfg);
  const auto hash = config_hash_hex(cfg);
  records.push_back({"infer", hash, "accuracy", rep.accuracy, "fraction"});
  records.push_back({"infer", hash, "correct",
                     static_cast<double>(rep.correct), "count"});
  records.push_back({"infer", hash, "energy", rep.energy, "CuVdd2"});
  records.push_back({"infer", hash, "cycles",
                     static_cast<double>(rep.cycles), "cycles"});
  records.push_back({"infer", hash, "saturations",
                     static_cast<double>(rep.saturations), "count"});

  std::cout << "accuracy=" << fmt_double(rep.accuracy)
            << " energy=" << fmt_double(rep.energy) << " cycles=" << rep.cycles
            << " saturations=" << rep.saturations << "\n";

  if (collect_codes && !codes.empty()) {
    std::vector<std::uint64_t> hist(1u << cfg.adc.bits, 0);
    for (auto c : codes) ++hist[c];
    std::string hist_csv = "code,count\n";
    for (std::size_t c = 0; c < hist.size(); ++c)
      hist_csv += std::to_string(c) + ',' + std::to_string(hist[c]) + '\n';
    write_text_file(out_path(cfg, "mav_codes.csv"), hist_csv);

    const auto dist = empirical_distribution(codes, cfg.adc.bits);
    const auto tree = build_optimal_tree(dist);
    const double expected = expected_comparisons(tree, dist);
    records.push_back({"infer", hash, "empirical_expected_comparisons",
                       expected, "comparisons"});
    write_text_file(out_path(cfg, "empirical_tree.txt"),
                    serialize_tree(tree) + "\n");
    std::cout << "empirical_expected_comparisons=" << fmt_double(expected)
              << "\n";
  }
  emit_reports(records, out_path(cfg, "infer_report"));
  return 0;
}

int cmd_sweep(const RunConfig& cfg, const std::vector<std::string>& mode_names,
              const std::vector<std::uint32_t>& bits_list) {
  prepare_out_dir(cfg);
  std::vector<AdcMode> modes;
  for (const auto& m : mode_names) modes.push_back(parse_mode_name(m));
  if (modes.empty()) modes.push_back(cfg.adc.mode);
  std::vector<std::uint32_t> bits = bits_list;
  if (bits.empty()) bits.push_back(cfg.adc.bits);

  std::vector<ReportRecord> records;
  for (const AdcMode mode : modes) {
    for (const std::uint32_t b : bits) {
      for (const double sigma : cfg.sweep_mismatch_sigmas) {
        RunConfig point = cfg;
        point.adc.mode = mode;
        point.adc.bits = b;
        if (mode == AdcMode::kFlash) point.adc.flash_bits = b;
        if (mode == AdcMode::kHybrid && point.adc.flash_bits >= b)
          point.adc.flash_bits = b > 1 ? b - 1 : 1;
        point.nonideal.cap_mismatch_sigma = sigma;
        point.validate();
        const auto hash = config_hash_hex(point);

        const auto table = monte_carlo_linearity(
            {sigma}, cfg.sweep_trials, point.geometry, point.adc,
            point.nonideal, point.points_per_code);
        const auto& q = table.front();
        records.push_back({"sweep", hash, "mismatch_sigma", sigma, "fraction"});
        records.push_back({"sweep", hash, "dnl_q50", q.dnl_q50, "LSB"});
        records.push_back({"sweep", hash, "dnl_q90", q.dnl_q90, "LSB"});
        records.push_back({"sweep", hash, "dnl_max", q.dnl_max, "LSB"});
        records.push_back({"sweep", hash, "inl_q50", q.inl_q50, "LSB"});
        records.push_back({"sweep", hash, "inl_q90", q.inl_q90, "LSB"});
        records.push_back({"sweep", hash, "inl_max", q.inl_max, "LSB"});
        if (mode != AdcMode::kTree) {
          const auto lat = latency_vs_precision(
              mode, b, b,
              mode == AdcMode::kHybrid ? point.adc.flash_bits : 2);
          records.push_back({"sweep", hash, "cycles_per_conversion",
                             static_cast<double>(lat[0].cycles), "cycles"});
          records.push_back({"sweep", hash, "comparators",
                             static_cast<double>(lat[0].comparators), "count"});
        }
        std::cout << "mode=" << to_string(mode) << " bits=" << b
                  << " sigma=" << fmt_double(sigma)
                  << " dnl_q90=" << fmt_double(q.dnl_q90)
                  << " inl_q90=" << fmt_double(q.inl_q90) << "\n";
      }
    }
  }
  emit_reports(records, out_path(cfg, "sweep_report"));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"behavioral simulator of memory-immersed collaborative ADC "
               "for compute-in-memory arrays"};
  app.require_subcommand(1);
  app.fallthrough();

  CliOverrides ov;
  app.add_option("--config", ov.config_path, "configuration file");
  std::uint64_t seed_flag = 0;
  auto* seed_opt = app.add_option("--seed", seed_flag, "seed override");
  std::uint32_t bits_flag = 0;
  auto* bits_opt = app.add_option("--bits", bits_flag, "ADC precision override");
  std::string mode_flag;
  auto* mode_opt =
      app.add_option("--mode", mode_flag, "adc mode: sar|flash|hybrid|tree");
  std::string out_flag;
  auto* out_opt = app.add_option("--out", out_flag, "output directory");

  auto* digitize = app.add_subcommand("digitize", "single conversions with traces");
  std::vector<double> xs;
  digitize->add_option("--x", xs, "measurand in [0,1], repeatable");
  std::uint32_t n_random = 0;
  digitize->add_option("--count", n_random, "additional random inputs");

  app.add_subcommand("ramp", "staircase ramp with DNL/INL analysis");

  auto* tree = app.add_subcommand("tree", "build/export the optimal search tree");
  std::string import_path;
  tree->add_option("--import", import_path, "evaluate a serialized tree instead");

  app.add_subcommand("schedule", "cycle-accurate fabric schedule and energy");

  auto* infer = app.add_subcommand("infer", "quantized MLP inference on the fabric");
  bool collect_codes = false;
  infer->add_flag("--collect-codes", collect_codes,
                  "dump MAV code histogram and fit a search tree to it");

  auto* sweep = app.add_subcommand("sweep", "grid sweep over sigma/mode/bits");
  std::vector<std::string> sweep_modes;
  sweep->add_option("--modes", sweep_modes, "modes to sweep")->delimiter(',');
  std::vector<std::uint32_t> sweep_bits;
  sweep->add_option("--bits-list", sweep_bits, "bit widths to sweep")
      ->delimiter(',');

  CLI11_PARSE(app, argc, argv);

  try {
    if (*seed_opt) ov.seed = seed_flag;
    if (*bits_opt) ov.bits = bits_flag;
    if (*mode_opt) ov.mode = mode_flag;
    if (*out_opt) ov.out_dir = out_flag;
    const RunConfig cfg = resolve_config(ov);

    if (digitize->parsed()) return cmd_digitize(cfg, xs, n_random);
    if (app.get_subcommand("ramp")->parsed()) return cmd_ramp(cfg);
    if (tree->parsed()) return cmd_tree(cfg, import_path);
    if (app.get_subcommand("schedule")->parsed()) return cmd_schedule(cfg);
    if (infer->parsed()) return cmd_infer(cfg, collect_codes);
    if (sweep->parsed()) return cmd_sweep(cfg, sweep_modes, sweep_bits);
    std::cerr << "no subcommand\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 2;
  }
}
