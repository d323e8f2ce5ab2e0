#include <catch2/catch_amalgamated.hpp>

#include <string>

#include "cimsim/config.hpp"
#include "cimsim/report.hpp"

using namespace cimsim;

TEST_CASE("empty config text yields the reference defaults") {
  const auto cfg = parse_config_text("");
  CHECK(cfg.geometry.rows == 16);
  CHECK(cfg.geometry.cols == 32);
  CHECK(cfg.adc.bits == 5);
  CHECK(cfg.adc.mode == AdcMode::kSar);
  CHECK(cfg.p_discharge == 0.25);
  CHECK(cfg.seed == 1);
  CHECK_FALSE(cfg.seed_from_file);
}

TEST_CASE("constraint violations surface as config errors") {
  CHECK_THROWS_AS(parse_config_text("[adc]\nbits = 6\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("[array]\ncols = 33\n"), ConfigError);
  CHECK_THROWS_AS(
      parse_config_text("[adc]\nmode = hybrid\nflash_bits = 5\n"), ConfigError);
  CHECK_NOTHROW(parse_config_text("[adc]\nmode = hybrid\nflash_bits = 2\n"));
  CHECK_THROWS_AS(parse_config_text("[nonideal]\ncap_mismatch_sigma = -1\n"),
                  RangeError);
}

TEST_CASE("unknown keys and malformed lines report their line number") {
  try {
    parse_config_text("[array]\nrows = 16\nbogus = 3\n");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    CHECK(std::string(e.what()).find("bogus") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_config_text("[nope]\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("[array]\nrows 16\n"), ConfigError);
  try {
    parse_config_text("[array]\nrows = sixteen\n");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
}

TEST_CASE("emit/parse round-trips every field") {
  RunConfig cfg;
  cfg.geometry.rows = 8;
  cfg.geometry.cols = 64;
  cfg.adc.bits = 6;
  cfg.adc.mode = AdcMode::kHybrid;
  cfg.adc.flash_bits = 3;
  cfg.adc.tolerant_bubbles = true;
  cfg.nonideal.cap_mismatch_sigma = 0.017;
  cfg.nonideal.parasitic_frac = 0.123456789;
  cfg.nonideal.comparator_offset = -0.001;
  cfg.nonideal.comparator_noise_sigma = 1e-4;
  cfg.cost.e_merge = 3.14159;
  cfg.dist_kind = DistKind::kUniform;
  cfg.p_discharge = 0.33;
  cfg.topology = TopologyMode::kHybrid;
  cfg.n_arrays = 10;
  cfg.samples = 12345678901ull;
  cfg.points_per_code = 128;
  cfg.dataset_path = "data/digits8x8_b1.txt";
  cfg.model_path = "data/model_1layer_b1.txt";
  cfg.sweep_mismatch_sigmas = {0.0, 0.01};
  cfg.sweep_noise_sigmas_lsb = {0.5};
  cfg.seed = 987654321;
  cfg.out_dir = "results/x";
  cfg.nonideal.seed = cfg.seed;

  const auto back = parse_config_text(emit_config(cfg));
  CHECK(back == cfg);
  CHECK(emit_config(back) == emit_config(cfg));
  CHECK(config_hash(back) == config_hash(cfg));
}

TEST_CASE("config hash tracks content but not the output path") {
  RunConfig a, b;
  CHECK(config_hash(a) == config_hash(b));
  CHECK(config_hash_hex(a).size() == 16);
  b.out_dir = "somewhere/else";
  CHECK(config_hash(a) == config_hash(b));
  b.adc.bits = 4;
  CHECK(config_hash(a) != config_hash(b));
}

TEST_CASE("report records serialize with fixed headers and units") {
  std::vector<ReportRecord> recs{
      {"tree", "00ff", "expected_comparisons", 3.4, "comparisons"},
      {"tree", "00ff", "entropy", 3.3, "bits"},
  };
  const auto csv = records_to_csv(recs);
  CHECK(csv.rfind("experiment,config_hash,metric,value,units\n", 0) == 0);
  CHECK(csv.find("tree,00ff,expected_comparisons,3.4,comparisons\n") !=
        std::string::npos);

  const auto json_text = records_to_json(recs);
  CHECK(json_text.find("\"metric\": \"entropy\"") != std::string::npos);
  CHECK(json_text.find("\"units\": \"bits\"") != std::string::npos);

  CHECK(records_to_csv(recs) == csv);  // byte-stable
  CHECK_THROWS_AS(records_to_csv({}), ArgumentError);
  CHECK_THROWS_AS(records_to_json({}), ArgumentError);
}
