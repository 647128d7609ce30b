// SPDX-License-Identifier: Apache-2.0

#include "isac/csv_export.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace isac::io {

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary); // fixed newlines on all hosts
  if (!out) throw std::runtime_error("cannot open output file: " + path);
  return out;
}

} // namespace

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

void export_metrics_csv(std::span<const harness::EpisodeResult> episodes,
                        std::uint64_t base_seed, const std::string& path) {
  auto out = open_out(path);
  out << "trial,frame,method,entity_id,metric_name,value\n";
  for (const auto& ep : episodes) {
    const auto trial = ep.seed - base_seed;
    const std::string method = harness::method_name(ep.method);
    for (std::size_t u = 0; u < ep.frames.size(); ++u) {
      const auto& fm = ep.frames[u];
      const std::string prefix =
          std::to_string(trial) + "," + std::to_string(u) + "," + method + ",";
      for (std::size_t i = 0; i < fm.pcrb_trace.size(); ++i)
        out << prefix << 't' << i << ",pcrb_trace,"
            << format_number(fm.pcrb_trace[i]) << "\n";
      for (std::size_t i = 0; i < fm.position_error.size(); ++i)
        out << prefix << 't' << i << ",position_error,"
            << format_number(fm.position_error[i]) << "\n";
      for (std::size_t i = 0; i < fm.dead_reckon_error.size(); ++i)
        out << prefix << 't' << i << ",dead_reckon_error,"
            << format_number(fm.dead_reckon_error[i]) << "\n";
      for (std::size_t k = 0; k < fm.throughput.size(); ++k)
        out << prefix << 'u' << k << ",throughput,"
            << format_number(fm.throughput[k]) << "\n";
      for (std::size_t k = 0; k < fm.qos_feasible.size(); ++k)
        out << prefix << 'u' << k << ",qos_feasible,"
            << (fm.qos_feasible[k] ? 1 : 0) << "\n";
      out << prefix << ",objective_value," << format_number(fm.objective_value)
          << "\n";
      out << prefix << ",solver_iterations," << fm.solver_iterations << "\n";
    }
  }
}

void export_trajectories_csv(std::span<const harness::EpisodeResult> episodes,
                             std::uint64_t base_seed,
                             const std::string& method_filter,
                             const std::string& path) {
  auto out = open_out(path);
  out << "trial,frame,target_id,true_x,true_y,est_x,est_y\n";
  for (const auto& ep : episodes) {
    if (harness::method_name(ep.method) != method_filter) continue;
    const auto trial = ep.seed - base_seed;
    for (std::size_t u = 0; u < ep.true_traj.size(); ++u)
      for (std::size_t m = 0; m < ep.true_traj[u].size(); ++m) {
        const auto& t = ep.true_traj[u][m];
        const auto& e = ep.est_traj[u][m];
        out << trial << ',' << u << ',' << m << ','
            << format_number(t[0]) << ',' << format_number(t[1]) << ','
            << format_number(e[0]) << ',' << format_number(e[1]) << "\n";
      }
  }
}

void export_allocations_csv(std::span<const harness::EpisodeResult> episodes,
                            std::uint64_t base_seed, bool full_grid,
                            const std::string& path) {
  auto out = open_out(path);
  out << "trial,frame,method,entity,entity_id,minislot,rbs,rb_start,power,"
         "beam\n";
  for (const auto& ep : episodes) {
    const auto trial = ep.seed - base_seed;
    const std::string method = harness::method_name(ep.method);
    for (std::size_t u = 0; u < ep.allocations.size(); ++u) {
      const auto& a = ep.allocations[u];
      const std::string prefix =
          std::to_string(trial) + "," + std::to_string(u) + "," + method + ",";
      // greedy left-to-right packing, visualization only: each target takes
      // one mini-slot (round robin), users fill the remaining RBs in index
      // order; offsets can exceed the grid when only the aggregate budget
      // holds (the budget-exempt upper bound)
      const int slots = a.user_rbs.empty()
                            ? static_cast<int>(
                                  std::max<std::size_t>(a.target_rbs.size(), 1))
                            : static_cast<int>(a.user_rbs.front().size());
      std::vector<int> cursor(slots, 0);
      std::vector<int> target_slot(a.target_rbs.size());
      std::vector<int> target_start(a.target_rbs.size());
      for (std::size_t m = 0; m < a.target_rbs.size(); ++m) {
        const int slot = static_cast<int>(m) % slots;
        target_slot[m] = slot;
        target_start[m] = cursor[slot];
        cursor[slot] += a.target_rbs[m];
      }
      std::vector<std::vector<int>> user_start(
          a.user_rbs.size(), std::vector<int>(slots, -1));
      for (int i = 0; i < slots; ++i)
        for (std::size_t k = 0; k < a.user_rbs.size(); ++k) {
          user_start[k][i] = cursor[i];
          cursor[i] += a.user_rbs[k][i];
        }

      for (std::size_t m = 0; m < a.target_rbs.size(); ++m)
        out << prefix << "target," << m << ',' << target_slot[m] << ','
            << a.target_rbs[m] << ',' << target_start[m] << ','
            << format_number(a.target_powers[m]) << ",-1\n";
      for (std::size_t k = 0; k < a.user_rbs.size(); ++k) {
        long total = 0;
        for (int o : a.user_rbs[k]) total += o;
        out << prefix << "user," << k << ",-1," << total << ",-1,"
            << format_number(a.user_powers[k]) << ','
            << a.user_beam_idx[k] << "\n";
        if (full_grid)
          for (std::size_t i = 0; i < a.user_rbs[k].size(); ++i)
            out << prefix << "user," << k << ',' << i << ','
                << a.user_rbs[k][i] << ',' << user_start[k][i] << ','
                << format_number(a.user_powers[k]) << ','
                << a.user_beam_idx[k] << "\n";
      }
    }
  }
}

void export_sweep_csv(std::span<const harness::SweepPoint> points,
                      const std::string& path) {
  auto out = open_out(path);
  out << "gamma,mean_pcrb,qos_ratio\n";
  for (const auto& p : points)
    out << format_number(p.gamma) << ',' << format_number(p.mean_pcrb) << ','
        << format_number(p.qos_ratio) << "\n";
}

void write_manifest(const RunManifest& manifest, const std::string& path) {
  nlohmann::json j;
  j["config"] = nlohmann::json::parse(manifest.config_json);
  j["seeds"] = manifest.seeds;
  j["methods"] = manifest.methods;
  j["artifacts"] = manifest.artifacts;
  j["tool_version"] = manifest.tool_version;
  j["wall_seconds"] = manifest.wall_seconds;
  auto out = open_out(path);
  out << j.dump(2) << "\n";
}

std::vector<MetricRow> read_metrics_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open metrics file: " + path);
  std::vector<MetricRow> rows;
  std::string line;
  std::getline(in, line); // header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    MetricRow r;
    std::istringstream ss(line);
    std::string field;
    std::getline(ss, field, ',');
    r.trial = std::stol(field);
    std::getline(ss, field, ',');
    r.frame = std::stol(field);
    std::getline(ss, r.method, ',');
    std::getline(ss, r.entity_id, ',');
    std::getline(ss, r.metric_name, ',');
    std::getline(ss, field, ',');
    r.value = std::stod(field);
    rows.push_back(std::move(r));
  }
  return rows;
}

} // namespace isac::io
