// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>

#include "isac/csv_export.hpp"

using namespace isac;

namespace {

ScenarioConfig tiny_run_cfg() {
  ScenarioConfig cfg;
  cfg.num_tx_antennas = 8;
  cfg.num_rx_antennas = 8;
  cfg.num_minislots_per_frame = 4;
  cfg.num_rbs = 16;
  cfg.num_frames = 3;
  cfg.num_targets = 2;
  cfg.num_users = 2;
  cfg.total_power = 10.0;
  cfg.num_paths = 4;
  cfg.distance_resolution = 110.0;
  cfg.throughput_threshold = 2e8;
  cfg.crb_const_distance = 1e16;
  return validate_config(cfg);
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  return {std::istreambuf_iterator<char>(in), {}};
}

struct TempDir {
  std::filesystem::path dir;
  explicit TempDir(const char* name) : dir(name) {
    std::filesystem::create_directories(dir);
  }
  ~TempDir() { std::filesystem::remove_all(dir); }
  std::string path(const char* f) const { return (dir / f).string(); }
};

} // namespace

TEST_CASE("number formatting survives a parse round trip") {
  for (double v : {1.0, -3.14159e-21, 199.52623149688787, 2.88e6,
                   0.07225663103256524, 1e300, 5.0 / 3.0})
    CHECK(std::abs(std::stod(io::format_number(v)) - v) <=
          1e-9 * std::abs(v));
}

TEST_CASE("metrics csv round trip and schema") {
  const auto cfg = tiny_run_cfg();
  const harness::Method methods[] = {harness::Method::proposed,
                                     harness::Method::rftep};
  const auto mc = harness::monte_carlo(cfg, methods, 2, true);
  TempDir tmp("tmp_export_test");
  const auto path = tmp.path("metrics.csv");
  io::export_metrics_csv(mc.episodes, cfg.rng_seed, path);

  const auto rows = io::read_metrics_csv(path);
  REQUIRE(!rows.empty());

  // schema: every (trial, frame, method) carries the per-entity metrics
  std::map<std::string, int> counts;
  for (const auto& r : rows) counts[r.metric_name]++;
  const int groups = 2 /*trials*/ * 2 /*methods*/ * cfg.num_frames;
  CHECK(counts["pcrb_trace"] == groups * cfg.num_targets);
  CHECK(counts["position_error"] == groups * cfg.num_targets);
  CHECK(counts["throughput"] == groups * cfg.num_users);
  CHECK(counts["qos_feasible"] == groups * cfg.num_users);
  CHECK(counts["objective_value"] == groups);

  // round trip: parsed values match the in-memory metrics within 1e-9
  for (const auto& r : rows) {
    if (r.metric_name != "pcrb_trace" || r.method != "proposed") continue;
    const int target = std::stoi(r.entity_id.substr(1));
    for (const auto& ep : mc.episodes) {
      if (harness::method_name(ep.method) != r.method ||
          ep.seed != cfg.rng_seed + r.trial)
        continue;
      const double mem = ep.frames[r.frame].pcrb_trace[target];
      CHECK(std::abs(r.value - mem) <= 1e-9 * std::abs(mem));
    }
  }
}

TEST_CASE("identical invocations produce byte-identical outputs") {
  const auto cfg = tiny_run_cfg();
  const harness::Method methods[] = {harness::Method::proposed};
  TempDir tmp("tmp_export_bytes");
  std::string first, second;
  for (int round = 0; round < 2; ++round) {
    const auto mc = harness::monte_carlo(cfg, methods, 2, true);
    const auto metrics = tmp.path(round == 0 ? "m1.csv" : "m2.csv");
    const auto traj = tmp.path(round == 0 ? "t1.csv" : "t2.csv");
    const auto allocs = tmp.path(round == 0 ? "a1.csv" : "a2.csv");
    io::export_metrics_csv(mc.episodes, cfg.rng_seed, metrics);
    io::export_trajectories_csv(mc.episodes, cfg.rng_seed, "proposed", traj);
    io::export_allocations_csv(mc.episodes, cfg.rng_seed, false, allocs);
    const auto blob = slurp(metrics) + slurp(traj) + slurp(allocs);
    (round == 0 ? first : second) = blob;
  }
  CHECK(first == second);
}

TEST_CASE("trajectory rows are one per trial, frame and target") {
  const auto cfg = tiny_run_cfg();
  const harness::Method methods[] = {harness::Method::proposed,
                                     harness::Method::upper_bound};
  const auto mc = harness::monte_carlo(cfg, methods, 2, true);
  TempDir tmp("tmp_export_traj");
  const auto path = tmp.path("trajectories.csv");
  io::export_trajectories_csv(mc.episodes, cfg.rng_seed, "proposed", path);
  const auto text = slurp(path);
  long lines = 0;
  for (char c : text) lines += c == '\n' ? 1 : 0;
  CHECK(lines == 1 + 2 * cfg.num_frames * cfg.num_targets);
}

TEST_CASE("manifest lists existing artifacts and the requested seeds") {
  const auto cfg = tiny_run_cfg();
  const harness::Method methods[] = {harness::Method::proposed};
  const auto mc = harness::monte_carlo(cfg, methods, 3, true);
  TempDir tmp("tmp_export_manifest");

  io::RunManifest man;
  man.config_json = config_to_json(cfg);
  for (int t = 0; t < 3; ++t) man.seeds.push_back(cfg.rng_seed + t);
  man.methods = {"proposed"};
  man.tool_version = "test";
  const auto metrics = tmp.path("metrics.csv");
  io::export_metrics_csv(mc.episodes, cfg.rng_seed, metrics);
  man.artifacts.push_back(metrics);
  const auto manifest = tmp.path("manifest.json");
  io::write_manifest(man, manifest);

  for (const auto& a : man.artifacts)
    CHECK(std::filesystem::exists(a));
  const auto text = slurp(manifest);
  CHECK(text.find("\"seeds\"") != std::string::npos);
  for (int t = 0; t < 3; ++t)
    CHECK(text.find(std::to_string(cfg.rng_seed + t)) != std::string::npos);
}
