// SPDX-License-Identifier: Apache-2.0

#include "isac/estimation.hpp"

#include <cmath>
#include <sstream>

namespace isac::estimation {

namespace {

Eigen::SelfAdjointEigenSolver<Mat4> eig_of(const Mat4& a) {
  Eigen::SelfAdjointEigenSolver<Mat4> es(0.5 * (a + a.transpose()));
  if (es.info() != Eigen::Success)
    throw NumericalError("symmetric eigendecomposition failed");
  return es;
}

} // namespace

Mat4 spd_inverse_strict(const Mat4& a) {
  const auto es = eig_of(a);
  const double lmax = es.eigenvalues().maxCoeff();
  const double lmin = es.eigenvalues().minCoeff();
  if (!(lmax > 0.0) || lmin <= lmax * 1e-15) {
    std::ostringstream os;
    os << "matrix numerically singular: eigenvalues [" << lmin << ", " << lmax
       << "], condition " << (lmin > 0 ? lmax / lmin : INFINITY);
    throw NumericalError(os.str());
  }
  const Vec4 inv = es.eigenvalues().cwiseInverse();
  Mat4 r = es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
  return 0.5 * (r + r.transpose());
}

Mat4 spd_inverse_floored(const Mat4& a) {
  const auto es = eig_of(a);
  const double lmax = es.eigenvalues().maxCoeff();
  if (!(lmax > 0.0))
    throw NumericalError("matrix not positive semidefinite");
  const double floor = lmax * 1e-12;
  Vec4 inv;
  for (int i = 0; i < 4; ++i)
    inv[i] = 1.0 / std::max(es.eigenvalues()[i], floor);
  Mat4 r = es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
  return 0.5 * (r + r.transpose());
}

Mat4 prior_fim(const Mat4& j_prev, const Mat4& f, const Mat4& phi) {
  return prior_fim_from_inverse(spd_inverse_strict(j_prev), f, phi);
}

Mat4 prior_fim_from_inverse(const Mat4& j_inv_prev, const Mat4& f,
                            const Mat4& phi) {
  const Mat4 s = phi + f * j_inv_prev * f.transpose();
  return spd_inverse_strict(s);
}

Mat4 data_fim(const Mat24& jac, const Mat2& meas_cov) {
  if (!(meas_cov(0, 0) > 0.0) || !(meas_cov(1, 1) > 0.0))
    throw NumericalError("data_fim: measurement covariance not PD");
  Mat4 j = jac.row(0).transpose() * jac.row(0) / meas_cov(0, 0) +
           jac.row(1).transpose() * jac.row(1) / meas_cov(1, 1);
  return 0.5 * (j + j.transpose());
}

double pcrb_trace(const Mat4& j) { return spd_inverse_strict(j).trace(); }

Mat4 rank_one_downdate(const Mat4& s, const Eigen::RowVector4d& q, double c) {
  if (c == 0.0) return s;
  const Vec4 sq = s * q.transpose();
  const double denom = 1.0 + c * q.dot(sq);
  Mat4 r = s - (c / denom) * (sq * sq.transpose());
  return 0.5 * (r + r.transpose());
}

namespace {

struct LinkCoeffs {
  double c_dist = 0.0;  // information per unit (q1^T q1)
  double c_ang = 0.0;   // information per unit (q2^T q2)
};

LinkCoeffs link_coeffs(double link_gain_sq, double power, double n_rbs,
                       const ScenarioConfig& cfg) {
  const double g = power * link_gain_sq;
  const double s2 = cfg.sensing_noise();
  const double nb = n_rbs * cfg.rb_bandwidth;
  return {g * nb * nb / (cfg.crb_const_distance * s2),
          g / (cfg.crb_const_angle * s2 * cfg.beamwidth)};
}

} // namespace

Mat4 posterior_crb(const Mat4& prior_cov, const Mat24& jac,
                   double link_gain_sq, double power, double n_rbs,
                   const ScenarioConfig& cfg) {
  const LinkCoeffs c = link_coeffs(link_gain_sq, power, n_rbs, cfg);
  const Mat4 a = rank_one_downdate(prior_cov, jac.row(1), c.c_ang);
  return rank_one_downdate(a, jac.row(0), c.c_dist);
}

double posterior_pcrb_trace(const Mat4& prior_cov, const Mat24& jac,
                            double link_gain_sq, double power, double n_rbs,
                            const ScenarioConfig& cfg) {
  return posterior_crb(prior_cov, jac, link_gain_sq, power, n_rbs, cfg)
      .trace();
}

namespace {

// Scalarization core for V = sum_r c_r q_r^T q_r with r in {1, 2}.
// Eigenpairs of E^-1/2 V E^-1/2 are taken from the low-rank factor
// A = [sqrt(c_r) E^-1/2 q_r^T]: the nonzero eigenvalues are those of the
// r x r Gram matrix A^T A, with the small root computed as det/lambda_max
// to dodge cancellation when the coefficient scales are far apart.
ScalarizedPcrb scalarize_core(const Mat4& e,
                              const std::array<Eigen::RowVector4d, 2>& q,
                              const std::array<double, 2>& c, int rank) {
  const auto es = eig_of(e);
  const double lmax = es.eigenvalues().maxCoeff();
  if (!(lmax > 0.0) || es.eigenvalues().minCoeff() <= 0.0)
    throw NumericalError("scalarize: E not positive definite");
  const double floor = lmax * 1e-12;
  Vec4 lam = es.eigenvalues().cwiseMax(floor);
  const Mat4 p = es.eigenvectors();
  const Mat4 e_isqrt =
      p * lam.cwiseSqrt().cwiseInverse().asDiagonal() * p.transpose();
  const Mat4 e_inv = p * lam.cwiseInverse().asDiagonal() * p.transpose();

  Eigen::Matrix<double, 4, 2> u = Eigen::Matrix<double, 4, 2>::Zero();
  for (int r = 0; r < rank; ++r)
    u.col(r) = std::sqrt(c[r]) * (e_isqrt * q[r].transpose());

  // eigenvalues of the Gram matrix
  double lam1 = 0.0, lam2 = 0.0;
  Eigen::Vector2d y1(1.0, 0.0), y2(0.0, 1.0);
  if (rank == 1) {
    lam1 = u.col(0).squaredNorm();
  } else {
    const double w11 = u.col(0).squaredNorm();
    const double w22 = u.col(1).squaredNorm();
    const double w12 = u.col(0).dot(u.col(1));
    const double tr = w11 + w22;
    const double det = std::max(w11 * w22 - w12 * w12, 0.0);
    const double disc = std::sqrt(
        std::max((w11 - w22) * (w11 - w22) + 4.0 * w12 * w12, 0.0));
    lam1 = 0.5 * (tr + disc);
    lam2 = lam1 > 0.0 ? det / lam1 : 0.0;
    if (std::abs(w12) > 0.0) {
      y1 = Eigen::Vector2d(w12, lam1 - w11).normalized();
      y2 = Eigen::Vector2d(-(lam1 - w11), w12).normalized();
    } else if (w22 > w11) {
      std::swap(y1, y2); // already diagonal, larger entry first
    }
  }

  // in-span eigenvectors, then orthonormal completion
  Eigen::Matrix<double, 4, 2> w = Eigen::Matrix<double, 4, 2>::Zero();
  int nspan = 0;
  if (rank == 1) {
    if (lam1 > 0.0) w.col(nspan++) = u.col(0).normalized();
  } else {
    if (lam1 > 0.0) w.col(nspan++) = (u.leftCols(2) * y1).normalized();
    if (lam2 > 0.0) w.col(nspan++) = (u.leftCols(2) * y2).normalized();
  }

  Mat4 g = Mat4::Identity();
  if (nspan > 0) {
    Eigen::HouseholderQR<Eigen::Matrix<double, 4, Eigen::Dynamic>> qr(
        w.leftCols(nspan));
    g = qr.householderQ();
    // householderQ may flip spans; realign leading columns with w
    for (int i = 0; i < nspan; ++i)
      if (g.col(i).dot(w.col(i)) < 0.0) g.col(i) = -g.col(i);
  }

  ScalarizedPcrb out;
  out.basis = g;
  out.eigvals = Vec4::Zero();
  if (nspan >= 1) out.eigvals[0] = lam1;
  if (nspan >= 2) out.eigvals[1] = lam2;
  for (int j = 0; j < 4; ++j) {
    const double denom = g.col(j).dot(e_inv * g.col(j));
    if (!(denom > 0.0))
      throw NumericalError("scalarize: nonpositive diagonal in basis trace");
    out.a[j] = 1.0 / denom;
    out.b[j] = out.a[j] * out.eigvals[j];
  }
  return out;
}

} // namespace

ScalarizedPcrb scalarize_rank1(const Mat4& e, const Eigen::RowVector4d& q,
                               double c) {
  return scalarize_core(0.5 * (e + e.transpose()), {q, q}, {c, 0.0}, 1);
}

ScalarizedPcrb scalarize_rank2(const Mat4& e, const Eigen::RowVector4d& q1,
                               double c1, const Eigen::RowVector4d& q2,
                               double c2) {
  return scalarize_core(0.5 * (e + e.transpose()), {q1, q2}, {c1, c2}, 2);
}

ScalarizedPcrb scalarize_bandwidth(const Mat4& j_prior, double link_gain_sq,
                                   double power, const Mat24& jac,
                                   const ScenarioConfig& cfg) {
  if (!(power >= 0.0))
    throw std::invalid_argument("scalarize_bandwidth: power must be >= 0");
  // power 0 degenerates to E = J_p, V = 0 (a target the power block starved)
  // c_dist at n = 1 is the coefficient of s = n^2
  const LinkCoeffs c = link_coeffs(link_gain_sq, power, 1.0, cfg);
  Mat4 e = j_prior + c.c_ang * jac.row(1).transpose() * jac.row(1);
  e = 0.5 * (e + e.transpose());
  return scalarize_core(e, {jac.row(0), jac.row(1)}, {c.c_dist, 0.0}, 1);
}

ScalarizedPcrb scalarize_power(const Mat4& j_prior, double link_gain_sq,
                               double n_rbs, const Mat24& jac,
                               const ScenarioConfig& cfg) {
  const LinkCoeffs c = link_coeffs(link_gain_sq, 1.0, n_rbs, cfg);
  return scalarize_core(0.5 * (j_prior + j_prior.transpose()),
                        {jac.row(0), jac.row(1)}, {c.c_dist, c.c_ang}, 2);
}

EkfUpdate ekf_step(const Vec4& est_prev, const Mat4& cov_prev,
                   const dynamics::MotionModel& model,
                   const dynamics::Measurement& z,
                   const std::function<Mat2(const Vec4&)>& cov_at) {
  EkfUpdate out;
  out.predicted = model.transition * est_prev;
  out.cov_predicted = model.transition * cov_prev *
                          model.transition.transpose() +
                      model.process_cov;
  out.cov_predicted = 0.5 * (out.cov_predicted + out.cov_predicted.transpose());

  const Mat24 jac = dynamics::measurement_jacobian(out.predicted);
  const Mat2 sigma = cov_at(out.predicted);
  const Mat2 s = sigma + jac * out.cov_predicted * jac.transpose();
  const double det = s.determinant();
  if (!(std::abs(det) > 0.0) || !std::isfinite(det))
    throw NumericalError("ekf_step: singular innovation covariance");
  const Mat2 s_inv = s.inverse();

  const Eigen::Matrix<double, 4, 2> gain =
      out.cov_predicted * jac.transpose() * s_inv;
  const dynamics::Polar pred_polar = dynamics::to_polar(out.predicted);
  Vec2 innov;
  innov[0] = z.z[0] - pred_polar.distance;
  innov[1] = dynamics::wrap_angle(z.z[1] - pred_polar.angle);

  out.estimate = out.predicted + gain * innov;
  Mat4 m = (Mat4::Identity() - gain * jac) * out.cov_predicted;
  out.cov = 0.5 * (m + m.transpose());
  return out;
}

} // namespace isac::estimation
