// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "isac/harness.hpp"

namespace isac::io {

// Numbers are printed with 10 significant digits so re-parsing stays within
// 1e-9 relative; identical runs produce byte-identical files.
std::string format_number(double v);

struct RunManifest {
  std::string config_json;
  std::vector<std::uint64_t> seeds;
  std::vector<std::string> methods;
  std::vector<std::string> artifacts;
  std::string tool_version;
  double wall_seconds = 0.0;
};

// metrics.csv: trial,frame,method,entity_id,metric_name,value
// Entity ids are "t<i>" and "u<k>"; frame-level rows use an empty id.
void export_metrics_csv(std::span<const harness::EpisodeResult> episodes,
                        std::uint64_t base_seed, const std::string& path);

// trajectories.csv: trial,frame,target_id,true_x,true_y,est_x,est_y
// One row per (trial, frame, target); estimates come from the first method.
void export_trajectories_csv(std::span<const harness::EpisodeResult> episodes,
                             std::uint64_t base_seed,
                             const std::string& method_filter,
                             const std::string& path);

// allocations.csv: trial,frame,method,entity,entity_id,minislot,rbs,power,beam
// Aggregate rows use minislot -1 (user rbs summed); full_grid adds one row
// per (user, mini-slot).
void export_allocations_csv(std::span<const harness::EpisodeResult> episodes,
                            std::uint64_t base_seed, bool full_grid,
                            const std::string& path);

// sweep.csv: gamma,mean_pcrb,qos_ratio
void export_sweep_csv(std::span<const harness::SweepPoint> points,
                      const std::string& path);

void write_manifest(const RunManifest& manifest, const std::string& path);

// Parsed view of metrics.csv rows (round-trip checks, downstream tooling).
struct MetricRow {
  long trial = 0;
  long frame = 0;
  std::string method;
  std::string entity_id;
  std::string metric_name;
  double value = 0.0;
};
std::vector<MetricRow> read_metrics_csv(const std::string& path);

} // namespace isac::io
