// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <string>

#include "isac/config.hpp"

using namespace isac;

TEST_CASE("default configuration is valid") {
  ScenarioConfig cfg;
  CHECK_NOTHROW(validate_config(cfg));
  CHECK(cfg.rb_bandwidth == doctest::Approx(12.0 * 120e3));
  CHECK(cfg.min_rb() == 70);                       // 1.5 m range resolution
  CHECK(cfg.sensing_noise() ==
        doctest::Approx(cfg.noise_psd * cfg.rb_bandwidth));
  CHECK(cfg.wavelength() == doctest::Approx(299792458.0 / 39e9));
}

TEST_CASE("out-of-range correlation names the field") {
  ScenarioConfig cfg;
  cfg.time_correlation = 1.2;
  try {
    validate_config(cfg);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("time_correlation") != std::string::npos);
    CHECK(std::string(e.what()).find("1.2") != std::string::npos);
  }
}

TEST_CASE("zero RB count names the field") {
  ScenarioConfig cfg;
  cfg.num_rbs = 0;
  try {
    validate_config(cfg);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("num_rbs") != std::string::npos);
  }
}

TEST_CASE("RB bandwidth must follow the subcarrier spacing") {
  ScenarioConfig cfg;
  cfg.rb_bandwidth = 1e6;
  CHECK_THROWS_AS(validate_config(cfg), ConfigError);
}

TEST_CASE("grid must fit the minimum demands") {
  ScenarioConfig cfg;
  cfg.num_rbs = 80;
  cfg.num_minislots_per_frame = 10;
  cfg.num_targets = 10; // 10 * 70 + 10 * 10 = 800 equals capacity exactly
  CHECK_NOTHROW(validate_config(cfg));
  cfg.num_targets = 11;
  CHECK_THROWS_AS(validate_config(cfg), ConfigError);
}

TEST_CASE("json config: defaults, overrides, unknown keys") {
  CHECK_NOTHROW(parse_config("{}"));
  const auto cfg = parse_config(R"({"num_targets": 3, "num_users": 2,
    "subcarrier_spacing": 60e3, "rng_seed": 77})");
  CHECK(cfg.num_targets == 3);
  CHECK(cfg.num_users == 2);
  CHECK(cfg.rb_bandwidth == doctest::Approx(12.0 * 60e3)); // derived
  CHECK(cfg.rng_seed == 77);

  CHECK_THROWS_AS(parse_config(R"({"num_target": 3})"), ConfigError);
  CHECK_THROWS_AS(parse_config("[1,2]"), ConfigError);
  CHECK_THROWS_AS(parse_config("{broken"), ConfigError);
}

TEST_CASE("json config round-trips through the manifest snapshot") {
  ScenarioConfig cfg;
  cfg.num_targets = 4;
  cfg.throughput_threshold = 2.5e6;
  cfg.throughput_in_bits = true;
  const auto again = parse_config(config_to_json(cfg));
  CHECK(again.num_targets == 4);
  CHECK(again.throughput_threshold == 2.5e6);
  CHECK(again.throughput_in_bits);
}

TEST_CASE("config file loading") {
  const std::string path = "test_cfg_tmp.json";
  {
    std::ofstream out(path);
    out << R"({"num_frames": 5})";
  }
  const auto cfg = load_config(path);
  CHECK(cfg.num_frames == 5);
  std::remove(path.c_str());
  CHECK_THROWS_AS(load_config("missing_file.json"), ConfigError);
}
