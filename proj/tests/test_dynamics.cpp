// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "isac/dynamics.hpp"
#include "isac/rng.hpp"

using namespace isac;
using std::numbers::pi;

TEST_CASE("transition matrix basics") {
  CHECK(dynamics::transition_matrix(0.0) == Mat4::Identity());
  const Mat4 f = dynamics::transition_matrix(0.01);
  const Vec4 x(1.0, 2.0, 10.0, 20.0);
  const Vec4 y = f * x;
  CHECK(y[0] == doctest::Approx(1.1));
  CHECK(y[1] == doctest::Approx(2.2));
  CHECK(y[2] == 10.0);
  CHECK(y[3] == 20.0);
  CHECK(dynamics::transition_matrix(3.7).determinant() ==
        doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("process noise covariance structure") {
  SUBCASE("unit time, unit level") {
    const Mat4 q = dynamics::process_noise_cov(1.0, 1.0);
    CHECK(q(0, 0) == doctest::Approx(1.0 / 3.0));
    CHECK(q(0, 2) == doctest::Approx(0.5));
    CHECK(q(2, 2) == doctest::Approx(1.0));
    CHECK(q(1, 1) == q(0, 0));
    CHECK(q(1, 3) == q(0, 2));
    CHECK(q(0, 1) == 0.0);
    CHECK(q(0, 3) == 0.0);
  }
  SUBCASE("per-axis block determinant is level^2 Ts^4 / 12") {
    for (double ts : {0.01, 0.5, 2.0})
      for (double lvl : {0.3, 1.0, 4.0}) {
        const Mat4 q = dynamics::process_noise_cov(ts, lvl);
        const double det2 = q(0, 0) * q(2, 2) - q(0, 2) * q(2, 0);
        CHECK(det2 ==
              doctest::Approx(lvl * lvl * std::pow(ts, 4) / 12.0)
                  .epsilon(1e-12));
      }
  }
  SUBCASE("zero level gives the zero matrix") {
    CHECK(dynamics::process_noise_cov(0.7, 0.0).norm() == 0.0);
  }
}

TEST_CASE("noiseless propagation is exact constant velocity") {
  const auto model = dynamics::make_motion_model(0.01, 0.0);
  Vec4 x(0.0, 0.0, 1.0, 0.0);
  const Vec4 one = dynamics::propagate_state(x, model, nullptr);
  CHECK(one[0] == doctest::Approx(0.01).epsilon(1e-15));
  for (int i = 0; i < 100; ++i) x = dynamics::propagate_state(x, model, nullptr);
  CHECK(x[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(x[1] == 0.0);
}

TEST_CASE("sampled process noise matches its covariance") {
  const auto model = dynamics::make_motion_model(0.5, 2.0);
  auto rng = make_rng(21, 0, 0);
  const Vec4 x0(5.0, -3.0, 1.0, 2.0);
  const Vec4 mean = model.transition * x0;
  Mat4 acc = Mat4::Zero();
  const int trials = 10000;
  for (int it = 0; it < trials; ++it) {
    const Vec4 d = dynamics::propagate_state(x0, model, &rng) - mean;
    acc += d * d.transpose();
  }
  acc /= trials;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      CHECK(acc(i, j) ==
            doctest::Approx(model.process_cov(i, j))
                .epsilon(0.1)
                .scale(model.process_cov.norm()));
}

TEST_CASE("polar conversion") {
  const auto p = dynamics::to_polar(Vec4(3.0, 4.0, 0.0, 0.0));
  CHECK(p.distance == doctest::Approx(5.0));
  CHECK(p.angle == doctest::Approx(0.9272952180016122));
  const auto q = dynamics::to_polar(Vec4(10.0, 0.0, 1.0, 1.0));
  CHECK(q.distance == 10.0);
  CHECK(q.angle == 0.0);
  const auto r = dynamics::to_polar(Vec4(0.0, 5.0, 0.0, 0.0));
  CHECK(r.distance == 5.0);
  CHECK(r.angle == doctest::Approx(pi / 2.0));
  CHECK_THROWS_AS(dynamics::to_polar(Vec4(0.0, 0.0, 1.0, 1.0)),
                  std::domain_error);
}

TEST_CASE("measurement Jacobian values and zero velocity columns") {
  const Mat24 j = dynamics::measurement_jacobian(Vec4(3.0, 4.0, 7.0, -2.0));
  CHECK(j(0, 0) == doctest::Approx(0.6));
  CHECK(j(0, 1) == doctest::Approx(0.8));
  CHECK(j(1, 0) == doctest::Approx(-0.16));
  CHECK(j(1, 1) == doctest::Approx(0.12));
  for (int col = 2; col < 4; ++col) {
    CHECK(j(0, col) == 0.0);
    CHECK(j(1, col) == 0.0);
  }
  // along the x axis the bearing sensitivity is 1/d
  const Mat24 ax = dynamics::measurement_jacobian(Vec4(25.0, 0.0, 0.0, 0.0));
  CHECK(ax(1, 1) == doctest::Approx(1.0 / 25.0));
  CHECK_THROWS_AS(dynamics::measurement_jacobian(Vec4::Zero()),
                  std::domain_error);
}

TEST_CASE("Jacobian matches central differences at random states") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> ux(-150.0, 150.0);
  for (int it = 0; it < 1000; ++it) {
    Vec4 s;
    do {
      s << ux(rng), ux(rng), 0.0, 0.0;
    } while (s.head<2>().norm() < 1.0);
    const Mat24 j = dynamics::measurement_jacobian(s);
    for (int col = 0; col < 2; ++col) {
      const double h = 1e-5;
      Vec4 sp = s, sm = s;
      sp[col] += h;
      sm[col] -= h;
      const auto pp = dynamics::to_polar(sp);
      const auto pm = dynamics::to_polar(sm);
      CHECK(j(0, col) ==
            doctest::Approx((pp.distance - pm.distance) / (2 * h))
                .epsilon(1e-6));
      CHECK(j(1, col) ==
            doctest::Approx(dynamics::wrap_angle(pp.angle - pm.angle) /
                            (2 * h))
                .epsilon(1e-6));
    }
  }
}

TEST_CASE("measurement covariance scalings") {
  ScenarioConfig cfg = validate_config(ScenarioConfig{});
  SUBCASE("doubling the RB count quarters the range variance only") {
    const Mat2 c1 = dynamics::measurement_cov(1e-9, 10.0, cfg);
    const Mat2 c2 = dynamics::measurement_cov(1e-9, 20.0, cfg);
    CHECK(c1(0, 0) / c2(0, 0) == doctest::Approx(4.0).epsilon(1e-12));
    CHECK(c1(1, 1) == c2(1, 1));
  }
  SUBCASE("doubling the link gain halves both variances") {
    const Mat2 c1 = dynamics::measurement_cov(1e-9, 10.0, cfg);
    const Mat2 c2 = dynamics::measurement_cov(2e-9, 10.0, cfg);
    CHECK(c1(0, 0) / c2(0, 0) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(c1(1, 1) / c2(1, 1) == doctest::Approx(2.0).epsilon(1e-12));
  }
  SUBCASE("unit normalization leaves diag(1, beamwidth)") {
    ScenarioConfig unit = cfg;
    unit.sensing_noise_power = 1.0;
    unit.rb_bandwidth = 1.0;
    unit.subcarrier_spacing = 1.0 / 12.0;
    const Mat2 c = dynamics::measurement_cov(1.0, 1.0, unit);
    CHECK(c(0, 0) == doctest::Approx(1.0));
    CHECK(c(1, 1) == doctest::Approx(unit.beamwidth));
    CHECK(c(0, 1) == 0.0);
  }
  SUBCASE("strictly decreasing in gain and in RBs (range only)") {
    double prev_d = 1e300, prev_phi = 1e300;
    for (double g = 1e-12; g < 1e-8; g *= 3.0) {
      const Mat2 c = dynamics::measurement_cov(g, 10.0, cfg);
      CHECK(c(0, 0) < prev_d);
      CHECK(c(1, 1) < prev_phi);
      prev_d = c(0, 0);
      prev_phi = c(1, 1);
    }
    prev_d = 1e300;
    for (double n = 1.0; n <= 264.0; n *= 2.0) {
      const Mat2 c = dynamics::measurement_cov(1e-9, n, cfg);
      CHECK(c(0, 0) < prev_d);
      prev_d = c(0, 0);
    }
  }
  SUBCASE("degenerate link is rejected") {
    CHECK_THROWS_AS(dynamics::measurement_cov(0.0, 1.0, cfg),
                    std::domain_error);
  }
}

TEST_CASE("measurement synthesis") {
  const Vec4 s(30.0, 40.0, 1.0, 1.0);
  SUBCASE("vanishing covariance reproduces the polar map") {
    auto rng = make_rng(41, 0, 0);
    const auto m = dynamics::synthesize_measurement(s, Mat2::Zero(), rng);
    CHECK(m.z[0] == doctest::Approx(50.0).epsilon(1e-15));
    CHECK(m.z[1] == doctest::Approx(std::atan2(40.0, 30.0)).epsilon(1e-15));
  }
  SUBCASE("sample variance tracks the requested covariance") {
    Mat2 cov = Mat2::Zero();
    cov(0, 0) = 0.04;
    cov(1, 1) = 1e-4;
    auto rng = make_rng(42, 0, 0);
    const auto truth = dynamics::to_polar(s);
    double vd = 0.0, vphi = 0.0;
    const int trials = 10000;
    for (int it = 0; it < trials; ++it) {
      const auto m = dynamics::synthesize_measurement(s, cov, rng);
      vd += (m.z[0] - truth.distance) * (m.z[0] - truth.distance);
      vphi += (m.z[1] - truth.angle) * (m.z[1] - truth.angle);
    }
    CHECK(vd / trials == doctest::Approx(0.04).epsilon(0.1));
    CHECK(vphi / trials == doctest::Approx(1e-4).epsilon(0.1));
  }
  SUBCASE("same seed, same measurement") {
    Mat2 cov = Mat2::Identity();
    auto r1 = make_rng(43, 0, 0);
    auto r2 = make_rng(43, 0, 0);
    const auto a = dynamics::synthesize_measurement(s, cov, r1);
    const auto b = dynamics::synthesize_measurement(s, cov, r2);
    CHECK(a.z == b.z);
  }
  SUBCASE("angles wrap into (-pi, pi]") {
    Mat2 cov = Mat2::Zero();
    cov(1, 1) = 25.0; // huge bearing noise forces wrapping
    auto rng = make_rng(44, 0, 0);
    for (int it = 0; it < 200; ++it) {
      const auto m = dynamics::synthesize_measurement(s, cov, rng);
      CHECK(m.z[1] <= pi);
      CHECK(m.z[1] > -pi);
    }
  }
}
