// SPDX-License-Identifier: Apache-2.0

#include "isac/dynamics.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace isac::dynamics {

using std::numbers::pi;

Mat4 transition_matrix(double ts) {
  if (ts < 0.0) throw std::invalid_argument("transition_matrix: Ts < 0");
  Mat4 f = Mat4::Identity();
  f(0, 2) = ts;
  f(1, 3) = ts;
  return f;
}

Mat4 process_noise_cov(double ts, double level) {
  if (ts < 0.0 || level < 0.0)
    throw std::invalid_argument("process_noise_cov: negative argument");
  const double t3 = ts * ts * ts / 3.0;
  const double t2 = ts * ts / 2.0;
  Mat4 q = Mat4::Zero();
  q(0, 0) = q(1, 1) = level * t3;
  q(2, 2) = q(3, 3) = level * ts;
  q(0, 2) = q(2, 0) = level * t2;
  q(1, 3) = q(3, 1) = level * t2;
  return q;
}

MotionModel make_motion_model(double ts, double level) {
  return {transition_matrix(ts), process_noise_cov(ts, level)};
}

Vec4 propagate_state(const Vec4& state, const MotionModel& model,
                     std::mt19937_64* rng) {
  Vec4 next = model.transition * state;
  if (rng && model.process_cov.trace() > 0.0) {
    // sample via the Cholesky factor; process_cov is PSD by construction
    Eigen::LLT<Mat4> llt(model.process_cov +
                         1e-300 * Mat4::Identity());
    std::normal_distribution<double> gauss(0.0, 1.0);
    Vec4 w;
    for (int i = 0; i < 4; ++i) w[i] = gauss(*rng);
    next += llt.matrixL() * w;
  }
  return next;
}

Polar to_polar(const Vec4& state) {
  const double d = std::hypot(state[0], state[1]);
  if (d < 0.1) throw std::domain_error("to_polar: target within 0.1 m of BS");
  return {d, std::atan2(state[1], state[0])};
}

Mat24 measurement_jacobian(const Vec4& state) {
  const double x = state[0], y = state[1];
  const double d2 = x * x + y * y;
  const double d = std::sqrt(d2);
  if (d < 0.1)
    throw std::domain_error("measurement_jacobian: target within 0.1 m of BS");
  Mat24 q = Mat24::Zero();
  q(0, 0) = x / d;
  q(0, 1) = y / d;
  q(1, 0) = -y / d2;
  q(1, 1) = x / d2;
  return q;
}

Mat2 measurement_cov(double link_gain, double n_rbs,
                     const ScenarioConfig& cfg) {
  if (!(link_gain > 0.0))
    throw std::domain_error("measurement_cov: degenerate link (g <= 0)");
  if (!(n_rbs >= 1.0))
    throw std::invalid_argument("measurement_cov: n_rbs must be >= 1");
  const double s2 = cfg.sensing_noise();
  const double nb = n_rbs * cfg.rb_bandwidth;
  Mat2 cov = Mat2::Zero();
  cov(0, 0) = cfg.crb_const_distance * s2 / (link_gain * nb * nb);
  cov(1, 1) = cfg.crb_const_angle * s2 * cfg.beamwidth / link_gain;
  return cov;
}

double wrap_angle(double a) {
  a = std::fmod(a, 2.0 * pi);
  if (a > pi) a -= 2.0 * pi;
  if (a <= -pi) a += 2.0 * pi;
  return a;
}

Measurement synthesize_measurement(const Vec4& true_state, const Mat2& cov,
                                   std::mt19937_64& rng) {
  if (cov(0, 0) < 0.0 || cov(1, 1) < 0.0)
    throw std::invalid_argument("synthesize_measurement: negative variance");
  const Polar p = to_polar(true_state);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double n_d = gauss(rng);
  const double n_phi = gauss(rng);
  Measurement m;
  m.cov = cov;
  m.z[0] = p.distance + std::sqrt(cov(0, 0)) * n_d;
  m.z[1] = wrap_angle(p.angle + std::sqrt(cov(1, 1)) * n_phi);
  return m;
}

} // namespace isac::dynamics
