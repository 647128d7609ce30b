// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end: Monte Carlo simulation, threshold sweeps,
// single-episode trajectory export, and the oracle cross-checks.
//
// Exit codes: 0 success, 1 runtime or infeasibility failure, 2 usage error.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "isac/csv_export.hpp"
#include "isac/harness.hpp"
#include "isac/oracle.hpp"

namespace {

constexpr const char* kVersion = "isac 1.0.0";

struct CommonArgs {
  std::string config_path;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int trials = 0;
  int frames = 0;
  std::string methods = "proposed,rftep,upper_bound";
  std::string out_dir = "out";
  std::string gamma_range = "0.8:1.05:0.05";
};

void add_common(CLI::App* app, CommonArgs& args) {
  app->add_option("--config", args.config_path, "JSON configuration file");
  app->add_option("--seed", args.seed, "base RNG seed")
      ->each([&](const std::string&) { args.seed_set = true; });
  app->add_option("--trials", args.trials, "number of Monte Carlo trials");
  app->add_option("--frames", args.frames, "override the number of frames");
  app->add_option("--methods", args.methods,
                  "comma list of proposed,rftep,upper_bound");
  app->add_option("--out", args.out_dir, "output directory");
  app->add_option("--gamma-range", args.gamma_range,
                  "sweep LO:HI:STEP in Mbits");
}

isac::ScenarioConfig load(const CommonArgs& args) {
  isac::ScenarioConfig cfg;
  if (!args.config_path.empty()) cfg = isac::load_config(args.config_path);
  if (args.seed_set) cfg.rng_seed = args.seed;
  if (args.frames > 0) cfg.num_frames = args.frames;
  return isac::validate_config(cfg);
}

std::vector<isac::harness::Method> parse_methods(const std::string& list) {
  std::vector<isac::harness::Method> methods;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) methods.push_back(isac::harness::method_from_name(item));
  if (methods.empty()) throw std::invalid_argument("empty method list");
  return methods;
}

std::vector<double> parse_gamma_range(const std::string& text) {
  double lo = 0.0, hi = 0.0, step = 0.0;
  if (std::sscanf(text.c_str(), "%lf:%lf:%lf", &lo, &hi, &step) != 3 ||
      step <= 0.0 || hi < lo)
    throw std::invalid_argument("bad --gamma-range, expected LO:HI:STEP");
  const int count = static_cast<int>(std::floor((hi - lo) / step + 0.5)) + 1;
  std::vector<double> gammas;
  for (int i = 0; i < count; ++i)
    gammas.push_back((lo + i * step) * 1e6); // Mbits -> bits
  return gammas;
}

std::string out_path(const CommonArgs& args, const std::string& name) {
  std::filesystem::create_directories(args.out_dir);
  return (std::filesystem::path(args.out_dir) / name).string();
}

isac::io::RunManifest make_manifest(const isac::ScenarioConfig& cfg,
                                    int trials,
                                    const std::vector<std::string>& methods) {
  isac::io::RunManifest man;
  man.config_json = isac::config_to_json(cfg);
  for (int t = 0; t < trials; ++t) man.seeds.push_back(cfg.rng_seed + t);
  man.methods = methods;
  man.tool_version = kVersion;
  return man;
}

int cmd_simulate(const CommonArgs& args) {
  const auto cfg = load(args);
  const auto methods = parse_methods(args.methods);
  const int trials = args.trials > 0 ? args.trials : 100;

  const auto t0 = std::chrono::steady_clock::now();
  const auto mc = isac::harness::monte_carlo(cfg, methods, trials, true);

  std::vector<std::string> method_names;
  for (auto m : methods) method_names.push_back(isac::harness::method_name(m));
  auto man = make_manifest(cfg, trials, method_names);

  const std::string metrics = out_path(args, "metrics.csv");
  isac::io::export_metrics_csv(mc.episodes, cfg.rng_seed, metrics);
  man.artifacts.push_back(metrics);
  const std::string traj = out_path(args, "trajectories.csv");
  isac::io::export_trajectories_csv(mc.episodes, cfg.rng_seed,
                                    method_names.front(), traj);
  man.artifacts.push_back(traj);
  const std::string allocs = out_path(args, "allocations.csv");
  isac::io::export_allocations_csv(mc.episodes, cfg.rng_seed, false, allocs);
  man.artifacts.push_back(allocs);

  man.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  isac::io::write_manifest(man, out_path(args, "manifest.json"));

  for (const auto& agg : mc.aggregates)
    std::cout << isac::harness::method_name(agg.method)
              << ": mean PCRB " << isac::io::format_number(agg.mean_pcrb_total)
              << ", QoS ratio "
              << isac::io::format_number(agg.qos_ratio_total) << "\n";
  return 0;
}

int cmd_sweep(const CommonArgs& args) {
  const auto cfg = load(args);
  const auto gammas = parse_gamma_range(args.gamma_range);
  const int trials = args.trials > 0 ? args.trials : 50;

  const auto t0 = std::chrono::steady_clock::now();
  const auto curve = isac::harness::tradeoff_sweep(cfg, gammas, trials);

  auto man = make_manifest(cfg, trials, {"proposed"});
  const std::string sweep = out_path(args, "sweep.csv");
  isac::io::export_sweep_csv(curve, sweep);
  man.artifacts.push_back(sweep);
  man.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  isac::io::write_manifest(man, out_path(args, "manifest.json"));

  for (const auto& p : curve)
    std::cout << "gamma " << isac::io::format_number(p.gamma) << ": mean PCRB "
              << isac::io::format_number(p.mean_pcrb) << ", QoS ratio "
              << isac::io::format_number(p.qos_ratio) << "\n";
  return 0;
}

int cmd_track(const CommonArgs& args) {
  auto cfg = load(args);
  auto methods = parse_methods(args.methods == "proposed,rftep,upper_bound"
                                   ? "proposed"
                                   : args.methods);
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<isac::harness::EpisodeResult> episodes;
  for (auto m : methods)
    episodes.push_back(isac::harness::run_episode(cfg, m, cfg.rng_seed));

  std::vector<std::string> method_names;
  for (auto m : methods) method_names.push_back(isac::harness::method_name(m));
  auto man = make_manifest(cfg, 1, method_names);

  const std::string metrics = out_path(args, "metrics.csv");
  isac::io::export_metrics_csv(episodes, cfg.rng_seed, metrics);
  man.artifacts.push_back(metrics);
  const std::string traj = out_path(args, "trajectories.csv");
  isac::io::export_trajectories_csv(episodes, cfg.rng_seed,
                                    method_names.front(), traj);
  man.artifacts.push_back(traj);
  const std::string allocs = out_path(args, "allocations.csv");
  isac::io::export_allocations_csv(episodes, cfg.rng_seed, true, allocs);
  man.artifacts.push_back(allocs);
  man.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  isac::io::write_manifest(man, out_path(args, "manifest.json"));
  std::cout << "episode exported to " << args.out_dir << "\n";
  return 0;
}

int cmd_oracle(const CommonArgs& args) {
  const std::uint64_t seed = args.seed_set ? args.seed : 1;
  const auto reports = isac::oracle::run_all(seed);
  bool all_pass = true;
  for (const auto& r : reports) {
    std::cout << (r.pass ? "[PASS] " : "[FAIL] ") << r.name << ": worst "
              << isac::io::format_number(r.worst) << " (tol "
              << isac::io::format_number(r.tolerance) << ", " << r.cases
              << " cases)\n";
    all_pass = all_pass && r.pass;
  }
  return all_pass ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"ISAC target-tracking resource allocation simulator"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  CommonArgs args;
  auto* sim = app.add_subcommand("simulate", "Monte Carlo over all methods");
  add_common(sim, args);
  auto* sweep =
      app.add_subcommand("sweep", "throughput-threshold trade-off sweep");
  add_common(sweep, args);
  auto* track =
      app.add_subcommand("track", "single-episode trajectory export");
  add_common(track, args);
  auto* oracle = app.add_subcommand("oracle", "run independent cross-checks");
  add_common(oracle, args);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e); // prints help, returns 0
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n" << app.help() << std::flush;
    return 2;
  }

  try {
    if (sim->parsed()) return cmd_simulate(args);
    if (sweep->parsed()) return cmd_sweep(args);
    if (track->parsed()) return cmd_track(args);
    if (oracle->parsed()) return cmd_oracle(args);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  std::cerr << app.help();
  return 2;
}
