// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace isac {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// All scenario and solver parameters. Defaults reproduce the reference
// mmWave setup: 64x64 ULA at 39 GHz, 120 kHz subcarriers (1.44 MHz RBs),
// 160 mini-slots x 264 RBs per 10 ms frame, 53 dBm budget, -174 dBm/Hz
// noise floor, 10 targets and 10 users.
struct ScenarioConfig {
  int num_tx_antennas = 64;            // Nt
  int num_rx_antennas = 64;            // Nr
  double carrier_freq = 39e9;          // Hz
  double subcarrier_spacing = 120e3;   // Hz
  double rb_bandwidth = 1.44e6;        // B0 = 12 * subcarrier_spacing
  double minislot_duration = 6.25e-5;  // T0, seconds (7 OFDM symbols)
  int num_minislots_per_frame = 160;   // I
  int num_rbs = 264;                   // N_RB
  int num_frames = 20;                 // U
  double frame_interval = 0.01;        // Ts, seconds
  int num_targets = 10;                // M
  int num_users = 10;                  // K
  double total_power = 199.52623149688787;    // P_max, watts (53 dBm)
  double noise_psd = 3.9810717055349693e-21;  // N0, W/Hz (-174 dBm/Hz)
  double sensing_noise_power = 0.0;    // sigma_s^2, watts; 0 -> N0 * B0
  double beamwidth = 0.07225663103256524;     // null-to-null, radians (4.14 deg)
  double rcs = 1.0;                    // sigma, m^2
  int num_paths = 10;                  // N_P
  double time_correlation = 0.75;      // rho_k
  double channel_innovation_var = 0.0; // sigma_h^2; 0 -> stationary per user
  double pathloss_const = 1e-3;        // K0 (-30 dB)
  double distance_resolution = 1.5;    // d_res, meters
  double throughput_threshold = 1e6;   // gamma_k, bits
  double process_noise_level = 1.0;    // sigma~_m
  double crb_const_distance = 1.0;     // kappa_d
  double crb_const_angle = 1.0;        // kappa_phi
  double penalty_init = 0.1;           // beta_0
  double penalty_growth = 5.0;
  double convergence_tol = 1e-3;
  std::uint64_t rng_seed = 1;

  // artifact knobs
  bool throughput_in_bits = false;     // multiply the rate sum by T0
  int codebook_oversampling = 1;       // N_CB = oversampling * Nt
  int bcd_max_outer = 50;

  double wavelength() const { return 299792458.0 / carrier_freq; }
  double sensing_noise() const {
    return sensing_noise_power > 0.0 ? sensing_noise_power
                                     : noise_psd * rb_bandwidth;
  }
  int codebook_size() const { return codebook_oversampling * num_tx_antennas; }
  int min_rb() const; // ceil(c / (2 B0 d_res)), see allocator
};

// Returns the config unchanged iff every invariant holds; otherwise throws
// ConfigError naming each violated field and its value.
ScenarioConfig validate_config(const ScenarioConfig& cfg);

// Loads a JSON config file. Every field is optional (defaults above);
// unknown keys are rejected. The result is validated.
ScenarioConfig load_config(const std::string& path);

// Parses a JSON string (same schema as load_config).
ScenarioConfig parse_config(const std::string& json_text);

// Effective config as a JSON string (used by the run manifest).
std::string config_to_json(const ScenarioConfig& cfg);

} // namespace isac
