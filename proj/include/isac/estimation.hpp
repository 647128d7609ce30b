// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <functional>

#include "isac/dynamics.hpp"
#include "isac/types.hpp"

namespace isac::estimation {

struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Inverse of a symmetric positive definite matrix through its
// eigendecomposition. The strict variant throws NumericalError (with a
// conditioning diagnostic) when the matrix is numerically singular; the
// floored variant clamps eigenvalues at 1e-12 of the largest.
Mat4 spd_inverse_strict(const Mat4& a);
Mat4 spd_inverse_floored(const Mat4& a);

// Prior information recursion (Phi + F J^-1 F^T)^-1.
Mat4 prior_fim(const Mat4& j_prev, const Mat4& f, const Mat4& phi);
// Same recursion fed with the carried inverse (posterior CRB) directly.
Mat4 prior_fim_from_inverse(const Mat4& j_inv_prev, const Mat4& f,
                            const Mat4& phi);

// Measurement information Q^T Sigma^-1 Q (rank <= 2).
Mat4 data_fim(const Mat24& jac, const Mat2& meas_cov);

double pcrb_trace(const Mat4& j);

// Rank-one covariance downdate: (S^-1 + c q^T q)^-1 for a row vector q.
Mat4 rank_one_downdate(const Mat4& s, const Eigen::RowVector4d& q, double c);

// Posterior CRB matrix for a given resource tuple, computed from the prior
// covariance by two rank-one downdates (numerically safe at extreme
// information scales).
Mat4 posterior_crb(const Mat4& prior_cov, const Mat24& jac,
                   double link_gain_sq, double power, double n_rbs,
                   const ScenarioConfig& cfg);

// trace(J^-1) of the posterior for the same resource tuple.
double posterior_pcrb_trace(const Mat4& prior_cov, const Mat24& jac,
                            double link_gain_sq, double power, double n_rbs,
                            const ScenarioConfig& cfg);

// Scalarized posterior trace: trace((E + s V)^-1) = sum_j 1/(a_j + b_j s),
// where s is n^2 for the bandwidth block and p for the power block. The
// pairs come from the eigenstructure of E^-1/2 V E^-1/2, computed through
// the low-rank factor of V so widely separated coefficient scales survive.
struct ScalarizedPcrb {
  std::array<double, 4> a{};  // all > 0
  std::array<double, 4> b{};  // all >= 0
  Mat4 basis = Mat4::Identity();
  Vec4 eigvals = Vec4::Zero();

  double eval(double s) const {
    double t = 0.0;
    for (int j = 0; j < 4; ++j) t += 1.0 / (a[j] + b[j] * s);
    return t;
  }
  double marginal(double s) const {
    double t = 0.0;
    for (int j = 0; j < 4; ++j) {
      const double den = a[j] + b[j] * s;
      t += b[j] / (den * den);
    }
    return t;
  }
};

// General entry points: V = c q^T q (rank one) or the sum of two such terms.
ScalarizedPcrb scalarize_rank1(const Mat4& e, const Eigen::RowVector4d& q,
                               double c);
ScalarizedPcrb scalarize_rank2(const Mat4& e, const Eigen::RowVector4d& q1,
                               double c1, const Eigen::RowVector4d& q2,
                               double c2);

// Bandwidth block: E = J_p + (g/(kappa_phi sigma_s^2 w_nn)) q2^T q2,
// V = (g B0^2/(kappa_d sigma_s^2)) q1^T q1, g = power * link_gain_sq.
ScalarizedPcrb scalarize_bandwidth(const Mat4& j_prior, double link_gain_sq,
                                   double power, const Mat24& jac,
                                   const ScenarioConfig& cfg);

// Power block: E = J_p, V = link_gain_sq [ (n B0)^2/(kappa_d sigma_s^2)
// q1^T q1 + 1/(kappa_phi sigma_s^2 w_nn) q2^T q2 ]; power divides out.
ScalarizedPcrb scalarize_power(const Mat4& j_prior, double link_gain_sq,
                               double n_rbs, const Mat24& jac,
                               const ScenarioConfig& cfg);

struct EkfUpdate {
  Vec4 predicted = Vec4::Zero();
  Mat4 cov_predicted = Mat4::Identity();
  Vec4 estimate = Vec4::Zero();
  Mat4 cov = Mat4::Identity();
};

// Five-step extended Kalman update. cov_at evaluates the measurement error
// covariance at the predicted state (it depends on the allocated resources).
// The bearing innovation is wrapped to (-pi, pi]; the output covariance is
// symmetrized.
EkfUpdate ekf_step(const Vec4& est_prev, const Mat4& cov_prev,
                   const dynamics::MotionModel& model,
                   const dynamics::Measurement& z,
                   const std::function<Mat2(const Vec4&)>& cov_at);

} // namespace isac::estimation
