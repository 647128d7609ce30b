// SPDX-License-Identifier: Apache-2.0

#include "isac/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <vector>

#include <json.hpp>

namespace isac {

int ScenarioConfig::min_rb() const {
  return static_cast<int>(
      std::ceil(299792458.0 / (2.0 * rb_bandwidth * distance_resolution)));
}

namespace {

struct Checker {
  std::vector<std::string> problems;

  template <typename T>
  void require(bool ok, const char* field, T value, const char* what) {
    if (!ok) {
      std::ostringstream os;
      os << field << " = " << value << " (" << what << ")";
      problems.push_back(os.str());
    }
  }
};

} // namespace

ScenarioConfig validate_config(const ScenarioConfig& cfg) {
  Checker c;
  c.require(cfg.num_tx_antennas >= 1, "num_tx_antennas", cfg.num_tx_antennas,
            "must be >= 1");
  c.require(cfg.num_rx_antennas >= 1, "num_rx_antennas", cfg.num_rx_antennas,
            "must be >= 1");
  c.require(cfg.carrier_freq > 0, "carrier_freq", cfg.carrier_freq,
            "must be > 0");
  c.require(cfg.subcarrier_spacing > 0, "subcarrier_spacing",
            cfg.subcarrier_spacing, "must be > 0");
  c.require(cfg.rb_bandwidth > 0, "rb_bandwidth", cfg.rb_bandwidth,
            "must be > 0");
  const double b0 = 12.0 * cfg.subcarrier_spacing;
  c.require(std::abs(cfg.rb_bandwidth - b0) <= 1e-9 * b0, "rb_bandwidth",
            cfg.rb_bandwidth, "must equal 12 x subcarrier_spacing");
  c.require(cfg.minislot_duration > 0, "minislot_duration",
            cfg.minislot_duration, "must be > 0");
  c.require(cfg.num_minislots_per_frame >= 1, "num_minislots_per_frame",
            cfg.num_minislots_per_frame, "must be >= 1");
  c.require(cfg.num_rbs >= 1, "num_rbs", cfg.num_rbs, "must be >= 1");
  c.require(cfg.num_frames >= 1, "num_frames", cfg.num_frames, "must be >= 1");
  c.require(cfg.frame_interval > 0, "frame_interval", cfg.frame_interval,
            "must be > 0");
  c.require(cfg.num_targets >= 1, "num_targets", cfg.num_targets,
            "must be >= 1");
  c.require(cfg.num_users >= 1, "num_users", cfg.num_users, "must be >= 1");
  c.require(cfg.total_power > 0, "total_power", cfg.total_power,
            "must be > 0");
  c.require(cfg.noise_psd > 0, "noise_psd", cfg.noise_psd, "must be > 0");
  c.require(cfg.sensing_noise_power >= 0, "sensing_noise_power",
            cfg.sensing_noise_power, "must be >= 0 (0 selects N0*B0)");
  c.require(cfg.beamwidth > 0, "beamwidth", cfg.beamwidth, "must be > 0");
  c.require(cfg.rcs > 0, "rcs", cfg.rcs, "must be > 0");
  c.require(cfg.num_paths >= 1, "num_paths", cfg.num_paths, "must be >= 1");
  c.require(cfg.time_correlation >= 0 && cfg.time_correlation <= 1,
            "time_correlation", cfg.time_correlation, "must be in [0, 1]");
  c.require(cfg.channel_innovation_var >= 0, "channel_innovation_var",
            cfg.channel_innovation_var, "must be >= 0 (0 selects stationary)");
  c.require(cfg.pathloss_const > 0, "pathloss_const", cfg.pathloss_const,
            "must be > 0");
  c.require(cfg.distance_resolution > 0, "distance_resolution",
            cfg.distance_resolution, "must be > 0");
  c.require(cfg.throughput_threshold >= 0, "throughput_threshold",
            cfg.throughput_threshold, "must be >= 0");
  c.require(cfg.process_noise_level >= 0, "process_noise_level",
            cfg.process_noise_level, "must be >= 0");
  c.require(cfg.crb_const_distance > 0, "crb_const_distance",
            cfg.crb_const_distance, "must be > 0");
  c.require(cfg.crb_const_angle > 0, "crb_const_angle", cfg.crb_const_angle,
            "must be > 0");
  c.require(cfg.penalty_init > 0, "penalty_init", cfg.penalty_init,
            "must be > 0");
  c.require(cfg.penalty_growth > 1, "penalty_growth", cfg.penalty_growth,
            "must be > 1");
  c.require(cfg.convergence_tol > 0, "convergence_tol", cfg.convergence_tol,
            "must be > 0");
  c.require(cfg.codebook_oversampling >= 1, "codebook_oversampling",
            cfg.codebook_oversampling, "must be >= 1");
  c.require(cfg.bcd_max_outer >= 1, "bcd_max_outer", cfg.bcd_max_outer,
            "must be >= 1");

  if (cfg.rb_bandwidth > 0 && cfg.distance_resolution > 0 &&
      cfg.num_rbs >= 1) {
    const long long capacity =
        static_cast<long long>(cfg.num_minislots_per_frame) * cfg.num_rbs;
    const long long demand =
        static_cast<long long>(cfg.num_targets) * cfg.min_rb() +
        static_cast<long long>(cfg.num_users) * cfg.num_minislots_per_frame;
    c.require(cfg.min_rb() <= cfg.num_rbs, "distance_resolution",
              cfg.distance_resolution,
              "minimum per-target RB requirement exceeds num_rbs");
    c.require(capacity >= demand, "num_rbs", cfg.num_rbs,
              "I x N_RB too small for M targets at n_req plus one RB per "
              "user per mini-slot");
  }

  if (!c.problems.empty()) {
    std::string msg = "invalid configuration:";
    for (const auto& p : c.problems) msg += "\n  - " + p;
    throw ConfigError(msg);
  }
  return cfg;
}

namespace {

using nlohmann::json;

void from_json_checked(const json& j, ScenarioConfig& cfg) {
  static const std::vector<std::string> known = {
      "num_tx_antennas", "num_rx_antennas", "carrier_freq",
      "subcarrier_spacing", "rb_bandwidth", "minislot_duration",
      "num_minislots_per_frame", "num_rbs", "num_frames", "frame_interval",
      "num_targets", "num_users", "total_power", "noise_psd",
      "sensing_noise_power", "beamwidth", "rcs", "num_paths",
      "time_correlation", "channel_innovation_var", "pathloss_const",
      "distance_resolution", "throughput_threshold", "process_noise_level",
      "crb_const_distance", "crb_const_angle", "penalty_init",
      "penalty_growth", "convergence_tol", "rng_seed", "throughput_in_bits",
      "codebook_oversampling", "bcd_max_outer"};
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const auto& k : known)
      if (it.key() == k) {
        ok = true;
        break;
      }
    if (!ok) throw ConfigError("unknown configuration key: " + it.key());
  }

  auto get = [&j](const char* key, auto& out) {
    if (j.contains(key)) out = j.at(key).get<std::decay_t<decltype(out)>>();
  };
  get("num_tx_antennas", cfg.num_tx_antennas);
  get("num_rx_antennas", cfg.num_rx_antennas);
  get("carrier_freq", cfg.carrier_freq);
  get("subcarrier_spacing", cfg.subcarrier_spacing);
  // B0 follows the subcarrier spacing unless given explicitly
  if (j.contains("subcarrier_spacing") && !j.contains("rb_bandwidth"))
    cfg.rb_bandwidth = 12.0 * cfg.subcarrier_spacing;
  get("rb_bandwidth", cfg.rb_bandwidth);
  get("minislot_duration", cfg.minislot_duration);
  get("num_minislots_per_frame", cfg.num_minislots_per_frame);
  get("num_rbs", cfg.num_rbs);
  get("num_frames", cfg.num_frames);
  get("frame_interval", cfg.frame_interval);
  get("num_targets", cfg.num_targets);
  get("num_users", cfg.num_users);
  get("total_power", cfg.total_power);
  get("noise_psd", cfg.noise_psd);
  get("sensing_noise_power", cfg.sensing_noise_power);
  get("beamwidth", cfg.beamwidth);
  get("rcs", cfg.rcs);
  get("num_paths", cfg.num_paths);
  get("time_correlation", cfg.time_correlation);
  get("channel_innovation_var", cfg.channel_innovation_var);
  get("pathloss_const", cfg.pathloss_const);
  get("distance_resolution", cfg.distance_resolution);
  get("throughput_threshold", cfg.throughput_threshold);
  get("process_noise_level", cfg.process_noise_level);
  get("crb_const_distance", cfg.crb_const_distance);
  get("crb_const_angle", cfg.crb_const_angle);
  get("penalty_init", cfg.penalty_init);
  get("penalty_growth", cfg.penalty_growth);
  get("convergence_tol", cfg.convergence_tol);
  get("rng_seed", cfg.rng_seed);
  get("throughput_in_bits", cfg.throughput_in_bits);
  get("codebook_oversampling", cfg.codebook_oversampling);
  get("bcd_max_outer", cfg.bcd_max_outer);
}

} // namespace

ScenarioConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config root must be a JSON object");
  ScenarioConfig cfg;
  from_json_checked(j, cfg);
  return validate_config(cfg);
}

ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string config_to_json(const ScenarioConfig& cfg) {
  json j;
  j["num_tx_antennas"] = cfg.num_tx_antennas;
  j["num_rx_antennas"] = cfg.num_rx_antennas;
  j["carrier_freq"] = cfg.carrier_freq;
  j["subcarrier_spacing"] = cfg.subcarrier_spacing;
  j["rb_bandwidth"] = cfg.rb_bandwidth;
  j["minislot_duration"] = cfg.minislot_duration;
  j["num_minislots_per_frame"] = cfg.num_minislots_per_frame;
  j["num_rbs"] = cfg.num_rbs;
  j["num_frames"] = cfg.num_frames;
  j["frame_interval"] = cfg.frame_interval;
  j["num_targets"] = cfg.num_targets;
  j["num_users"] = cfg.num_users;
  j["total_power"] = cfg.total_power;
  j["noise_psd"] = cfg.noise_psd;
  j["sensing_noise_power"] = cfg.sensing_noise_power;
  j["beamwidth"] = cfg.beamwidth;
  j["rcs"] = cfg.rcs;
  j["num_paths"] = cfg.num_paths;
  j["time_correlation"] = cfg.time_correlation;
  j["channel_innovation_var"] = cfg.channel_innovation_var;
  j["pathloss_const"] = cfg.pathloss_const;
  j["distance_resolution"] = cfg.distance_resolution;
  j["throughput_threshold"] = cfg.throughput_threshold;
  j["process_noise_level"] = cfg.process_noise_level;
  j["crb_const_distance"] = cfg.crb_const_distance;
  j["crb_const_angle"] = cfg.crb_const_angle;
  j["penalty_init"] = cfg.penalty_init;
  j["penalty_growth"] = cfg.penalty_growth;
  j["convergence_tol"] = cfg.convergence_tol;
  j["rng_seed"] = cfg.rng_seed;
  j["throughput_in_bits"] = cfg.throughput_in_bits;
  j["codebook_oversampling"] = cfg.codebook_oversampling;
  j["bcd_max_outer"] = cfg.bcd_max_outer;
  return j.dump(2);
}

} // namespace isac
