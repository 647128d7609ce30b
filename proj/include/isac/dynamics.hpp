// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <random>

#include "isac/types.hpp"

namespace isac::dynamics {

// Constant-velocity transition [[1, Ts], [0, 1]] (x) I2.
Mat4 transition_matrix(double ts);

// Continuous white-acceleration process noise
// [[Ts^3/3, Ts^2/2], [Ts^2/2, Ts]] (x) level * I2.
Mat4 process_noise_cov(double ts, double level);

struct MotionModel {
  Mat4 transition = Mat4::Identity();
  Mat4 process_cov = Mat4::Zero();
};

MotionModel make_motion_model(double ts, double level);

// One motion step; rng may be null for the noiseless model.
Vec4 propagate_state(const Vec4& state, const MotionModel& model,
                     std::mt19937_64* rng);

struct Polar {
  double distance = 0.0;
  double angle = 0.0; // atan2 full-plane bearing
};

// Throws std::domain_error within 0.1 m of the array (Jacobian blow-up).
Polar to_polar(const Vec4& state);

// Rows are d(d, phi)/d(x, y, xdot, ydot); velocity columns are zero.
Mat24 measurement_jacobian(const Vec4& state);

// Resource-dependent measurement error covariance:
//   sigma_d^2   = kappa_d  sigma_s^2 / (g (n B0)^2)
//   sigma_phi^2 = kappa_phi sigma_s^2 beamwidth / g
// with g = p ||H f||^2. Throws std::domain_error when g <= 0.
Mat2 measurement_cov(double link_gain, double n_rbs,
                     const ScenarioConfig& cfg);

struct Measurement {
  Vec2 z = Vec2::Zero();  // (distance, angle)
  Mat2 cov = Mat2::Zero();
};

// z = g(state) + noise with the given diagonal covariance; the angle is
// wrapped to (-pi, pi].
Measurement synthesize_measurement(const Vec4& true_state, const Mat2& cov,
                                   std::mt19937_64& rng);

double wrap_angle(double a);

} // namespace isac::dynamics
