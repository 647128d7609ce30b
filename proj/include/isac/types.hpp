// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>
#include <complex>
#include <vector>

#include "isac/config.hpp"

namespace isac {

using Vec2 = Eigen::Vector2d;
using Vec4 = Eigen::Vector4d;
using Mat2 = Eigen::Matrix2d;
using Mat4 = Eigen::Matrix4d;
using Mat24 = Eigen::Matrix<double, 2, 4>;
using CVec = Eigen::VectorXcd;
using cplx = std::complex<double>;

// Kinematic state (x, y, xdot, ydot) of one target plus its tracking state.
// fim_inv (the posterior CRB matrix) is the quantity carried across frames;
// fim is the explicitly assembled information matrix.
struct TargetState {
  Vec4 state = Vec4::Zero();
  Mat4 fim = Mat4::Identity();
  Mat4 fim_inv = Mat4::Identity();
  Vec4 ekf_estimate = Vec4::Zero();
  Mat4 ekf_cov = Mat4::Identity();
};

struct UserState {
  Vec2 position = Vec2::Zero();
  CVec channel;
  double throughput_threshold = 0.0;
  double innovation_var = 0.0; // per-entry variance of the channel innovation
};

// One frame's resource decision. user_rbs is indexed [user][mini-slot].
struct Allocation {
  std::vector<int> target_rbs;
  std::vector<double> target_powers;
  std::vector<std::vector<int>> user_rbs;
  std::vector<double> user_powers;
  std::vector<int> user_beam_idx;
  bool budget_exempt = false;

  // Throws std::invalid_argument listing every violated constraint:
  // bounds n_req <= n_m <= N_RB and 1 <= o_ki <= N_RB, the RU budget,
  // and the power budget. Budget checks are skipped for budget_exempt
  // allocations (used by the resource upper bound).
  void validate(const ScenarioConfig& cfg) const;

  int ru_total() const;
  double power_total() const;
};

struct FrameMetrics {
  std::vector<double> pcrb_trace;      // per target
  std::vector<double> position_error;  // per target, |est - true| after update
  std::vector<double> dead_reckon_error; // per target
  std::vector<double> throughput;      // per user, at the emitted allocation
  std::vector<bool> qos_feasible;      // per user
  int solver_iterations = 0;
  double objective_value = 0.0;
};

} // namespace isac
