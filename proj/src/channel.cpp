// SPDX-License-Identifier: Apache-2.0

#include "isac/channel.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "isac/kernels.hpp"

namespace isac::channel {

using std::numbers::pi;

CVec steering_vector(double angle, int n_antennas, double wavelength) {
  if (n_antennas < 1)
    throw std::invalid_argument("steering_vector: n_antennas must be >= 1");
  (void)wavelength; // phase step is pi*sin(angle) at d = lambda/2
  CVec v(n_antennas);
  const double scale = std::sqrt(1.0 / n_antennas);
  const double step = pi * std::sin(angle);
  for (int q = 0; q < n_antennas; ++q)
    v[q] = std::polar(scale, step * q);
  return v;
}

double reflection_coeff_sq(double distance, const ScenarioConfig& cfg) {
  if (!(distance > 0.0))
    throw std::domain_error("reflection_coeff_sq: distance must be > 0");
  const double lambda = cfg.wavelength();
  const double d2 = distance * distance;
  return cfg.num_tx_antennas * cfg.num_rx_antennas * lambda * lambda *
         cfg.rcs / (4.0 * pi * pi * pi * d2 * d2);
}

SensingLink sensing_gain(double distance, double aod, const CVec& beam,
                         const ScenarioConfig& cfg) {
  SensingLink link;
  link.alpha_sq = reflection_coeff_sq(distance, cfg);
  link.aod = aod;
  link.aoa = aod; // monostatic round trip
  // ||H f||^2 = alpha^2 ||a_r||^2 |a_t^H f|^2 with unit-norm a_r
  const CVec at = steering_vector(aod, cfg.num_tx_antennas, cfg.wavelength());
  const cplx proj =
      kernels::cdot_conj(at.data(), beam.data(), static_cast<std::size_t>(at.size()));
  link.gain_sq = link.alpha_sq * std::norm(proj);
  return link;
}

Codebook build_codebook(int n_antennas, int n_beams, double wavelength) {
  if (n_beams < 1)
    throw std::invalid_argument("build_codebook: n_beams must be >= 1");
  Codebook cb;
  cb.beams.reserve(n_beams);
  for (int n = 0; n < n_beams; ++n) {
    const double s = -1.0 + 2.0 * n / n_beams; // sin(theta) grid over [-1, 1)
    cb.beams.push_back(steering_vector(std::asin(s), n_antennas, wavelength));
  }
  return cb;
}

CVec geometric_channel(std::span<const std::pair<cplx, double>> paths,
                       int n_antennas, double wavelength) {
  if (paths.empty())
    throw std::invalid_argument("geometric_channel: needs at least one path");
  CVec h = CVec::Zero(n_antennas);
  const double scale =
      std::sqrt(static_cast<double>(n_antennas) / paths.size());
  for (const auto& [coeff, angle] : paths) {
    const CVec at = steering_vector(angle, n_antennas, wavelength);
    for (int q = 0; q < n_antennas; ++q) h[q] += scale * coeff * std::conj(at[q]);
  }
  return h;
}

CVec initial_comm_channel(const ScenarioConfig& cfg, double user_distance,
                          std::mt19937_64& rng) {
  const double var = cfg.pathloss_const / (user_distance * user_distance);
  std::normal_distribution<double> gauss(0.0, std::sqrt(var / 2.0));
  std::uniform_real_distribution<double> angle(-pi / 2.0, pi / 2.0);
  std::vector<std::pair<cplx, double>> paths(cfg.num_paths);
  for (auto& p : paths) {
    const double re = gauss(rng), im = gauss(rng);
    p = {cplx(re, im), angle(rng)};
  }
  return geometric_channel(paths, cfg.num_tx_antennas, cfg.wavelength());
}

CVec evolve_comm_channel(const CVec& prev, double rho, double sigma_h2,
                         std::mt19937_64& rng) {
  if (rho < 0.0 || rho > 1.0)
    throw std::invalid_argument("evolve_comm_channel: rho must be in [0, 1]");
  const double innov = std::sqrt(1.0 - rho * rho);
  std::normal_distribution<double> gauss(0.0, std::sqrt(sigma_h2 / 2.0));
  CVec h(prev.size());
  for (Eigen::Index q = 0; q < prev.size(); ++q) {
    const cplx w(gauss(rng), gauss(rng));
    h[q] = rho * prev[q] + innov * w;
  }
  return h;
}

double beam_gain_sq(const CVec& h, const CVec& beam) {
  return kernels::cdot_abs2(h.data(), beam.data(),
                            static_cast<std::size_t>(h.size()));
}

double throughput(std::span<const double> user_rbs, double power,
                  double hf_abs2, const ScenarioConfig& cfg) {
  const double s = power * hf_abs2 / cfg.noise_psd;
  double r = kernels::rate_sum(user_rbs.data(), user_rbs.size(),
                               cfg.rb_bandwidth, s);
  if (cfg.throughput_in_bits) r *= cfg.minislot_duration;
  return r;
}

double throughput(std::span<const double> user_rbs, double power,
                  const CVec& h, const CVec& beam, const ScenarioConfig& cfg) {
  return throughput(user_rbs, power, beam_gain_sq(h, beam), cfg);
}

double throughput(std::span<const int> user_rbs, double power, double hf_abs2,
                  const ScenarioConfig& cfg) {
  std::vector<double> o(user_rbs.begin(), user_rbs.end());
  return throughput(std::span<const double>(o), power, hf_abs2, cfg);
}

QosGap qos_gap(std::span<const double> user_rbs, double power, double hf_abs2,
               double gamma, const ScenarioConfig& cfg) {
  const double c = hf_abs2 / cfg.noise_psd; // SNR scale per watt
  const double s = power * c;
  QosGap gap;
  gap.grad_rbs.resize(user_rbs.size());
  double inv_sum = 0.0;
  double r = kernels::rate_sum_grad(user_rbs.data(), user_rbs.size(),
                                    cfg.rb_bandwidth, s, gap.grad_rbs.data(),
                                    &inv_sum);
  constexpr double kInvLn2 = 1.4426950408889634074;
  double dp = c * kInvLn2 * inv_sum;
  const double t0 = cfg.throughput_in_bits ? cfg.minislot_duration : 1.0;
  gap.value = gamma - r * t0;
  for (auto& g : gap.grad_rbs) g = -g * t0;
  gap.grad_power = -dp * t0;
  return gap;
}

} // namespace isac::channel
