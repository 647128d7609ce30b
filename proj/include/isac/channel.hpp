// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <random>
#include <span>
#include <utility>
#include <vector>

#include "isac/types.hpp"

namespace isac::channel {

// Unit-norm ULA steering vector at half-wavelength spacing: entry q is
// sqrt(1/N) exp(j pi (q-1) sin(angle)).
CVec steering_vector(double angle, int n_antennas, double wavelength);

struct SensingLink {
  double gain_sq = 0.0;   // ||H f||^2 for the probed beam (power-free)
  double alpha_sq = 0.0;  // reflection coefficient squared
  double aod = 0.0;       // radians
  double aoa = 0.0;       // radians (monostatic: equals aod)
};

// Round-trip reflection channel H = alpha a_r(phi) a_t^H(theta) with
// alpha^2 = Nt Nr lambda^2 rcs / (4 pi^3 d^4), evaluated for a given probe
// beam. Throws std::domain_error for d <= 0.
SensingLink sensing_gain(double distance, double aod, const CVec& beam,
                         const ScenarioConfig& cfg);

// alpha^2 only (used where the beam is known to match the steering vector).
double reflection_coeff_sq(double distance, const ScenarioConfig& cfg);

struct Codebook {
  std::vector<CVec> beams; // unit norm, sin(theta) gridded over [-1, 1)
};

Codebook build_codebook(int n_antennas, int n_beams, double wavelength);

// h = sqrt(Nt/N_P) sum_p coeff_p a_t^H(theta_p), as a row vector.
CVec geometric_channel(std::span<const std::pair<cplx, double>> paths,
                       int n_antennas, double wavelength);

// Draws path coefficients CN(0, K0 d^-2) and AoDs uniform on [-pi/2, pi/2].
CVec initial_comm_channel(const ScenarioConfig& cfg, double user_distance,
                          std::mt19937_64& rng);

// First-order Gauss-Markov update h' = rho h + sqrt(1-rho^2) w with
// circularly-symmetric per-entry innovation variance sigma_h2.
CVec evolve_comm_channel(const CVec& prev, double rho, double sigma_h2,
                         std::mt19937_64& rng);

// Per-frame rate sum_i (o_i B0) log2(1 + p |h f|^2 / (o_i B0 N0)); if
// cfg.throughput_in_bits is set the result is additionally scaled by the
// mini-slot duration so the unit is bits rather than bit/s.
double throughput(std::span<const double> user_rbs, double power,
                  const CVec& h, const CVec& beam, const ScenarioConfig& cfg);
double throughput(std::span<const double> user_rbs, double power,
                  double hf_abs2, const ScenarioConfig& cfg);
double throughput(std::span<const int> user_rbs, double power, double hf_abs2,
                  const ScenarioConfig& cfg);

// |h . f|^2 without conjugation (h already carries the conjugate steering).
double beam_gain_sq(const CVec& h, const CVec& beam);

struct QosGap {
  double value = 0.0;              // gamma - throughput
  std::vector<double> grad_rbs;    // d value / d o_i
  double grad_power = 0.0;         // d value / d p
};

// Constraint-gap form of the throughput requirement, with exact analytic
// gradient of the continuous relaxation. Convex in (o, p).
QosGap qos_gap(std::span<const double> user_rbs, double power, double hf_abs2,
               double gamma, const ScenarioConfig& cfg);

} // namespace isac::channel
