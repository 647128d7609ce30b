// SPDX-License-Identifier: Apache-2.0

#include "isac/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "isac/allocator.hpp"
#include "isac/channel.hpp"
#include "isac/dynamics.hpp"
#include "isac/estimation.hpp"
#include "isac/harness.hpp"
#include "isac/rng.hpp"

namespace isac::oracle {

namespace {

Mat4 random_spd(std::mt19937_64& rng, double lo, double hi) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> ev(lo, hi);
  Mat4 a;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) a(i, j) = g(rng);
  const Eigen::HouseholderQR<Mat4> qr(a);
  const Mat4 q = qr.householderQ();
  Vec4 lam;
  for (int i = 0; i < 4; ++i) lam[i] = ev(rng);
  Mat4 e = q * lam.asDiagonal() * q.transpose();
  return 0.5 * (e + e.transpose());
}

Eigen::RowVector4d random_unit_row(std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::RowVector4d v;
  for (int i = 0; i < 4; ++i) v[i] = g(rng);
  return v.normalized();
}

} // namespace

OracleReport scalarization_identity(int instances, std::uint64_t seed) {
  OracleReport rep{"scalarization identity vs dense inverse", 0, 0.0, 1e-8,
                   false};
  auto rng = make_rng(seed, 0x53434131ull);
  std::uniform_real_distribution<double> cs(0.03, 3.0);
  const double n_values[] = {1.0, 10.0, 70.0, 264.0};
  for (int it = 0; it < instances; ++it) {
    const Mat4 e = random_spd(rng, 1.0, 100.0);
    const Eigen::RowVector4d q = random_unit_row(rng);
    const double c = cs(rng);
    const auto scal = estimation::scalarize_rank1(e, q, c);
    const Mat4 v = c * q.transpose() * q;
    for (double n : n_values) {
      const double s = n * n;
      const double lhs = scal.eval(s);
      const double rhs = (e + s * v).inverse().trace();
      const double err = std::abs(lhs - rhs) / std::abs(rhs);
      rep.worst = std::max(rep.worst, err);
      ++rep.cases;
    }
  }
  rep.pass = rep.worst <= rep.tolerance;
  return rep;
}

OracleReport power_block_grid(int instances, int grid_points,
                              std::uint64_t seed) {
  OracleReport rep{"power water-filling vs grid search", 0, 0.0, 1e-6, false};
  auto rng = make_rng(seed, 0x50574731ull);
  std::uniform_real_distribution<double> ab(0.5, 5.0);
  std::uniform_real_distribution<double> ub(0.5, 2.0);
  std::uniform_int_distribution<int> nb(1, 2); // active terms per target
  for (int it = 0; it < instances; ++it) {
    std::vector<estimation::ScalarizedPcrb> scal(2);
    for (auto& s : scal) {
      const int active = nb(rng);
      for (int j = 0; j < 4; ++j) {
        s.a[j] = ab(rng);
        s.b[j] = j < active ? ab(rng) : 0.0;
      }
    }
    const double budget = ub(rng);
    const auto p = alloc::solve_power_block(scal, budget);
    const double obj_bis = scal[0].eval(p[0]) + scal[1].eval(p[1]);

    // exhaustive split of the budget between the two targets
    double obj_grid = std::numeric_limits<double>::infinity();
    for (int i = 0; i <= grid_points; ++i) {
      const double p1 = budget * i / grid_points;
      obj_grid = std::min(obj_grid,
                          scal[0].eval(p1) + scal[1].eval(budget - p1));
    }
    rep.worst = std::max(rep.worst, std::abs(obj_bis - obj_grid));
    ++rep.cases;
  }
  rep.pass = rep.worst <= rep.tolerance;
  return rep;
}

namespace {

// One-target/one-user/one-mini-slot setup sized so the RB count, user RBs
// and the power split all genuinely move the objective.
ScenarioConfig tiny_config() {
  ScenarioConfig cfg;
  cfg.num_tx_antennas = 16;
  cfg.num_rx_antennas = 16;
  cfg.num_minislots_per_frame = 1;
  cfg.num_rbs = 8;
  cfg.num_frames = 1;
  cfg.num_targets = 1;
  cfg.num_users = 1;
  cfg.total_power = 10.0;
  cfg.num_paths = 4;
  cfg.distance_resolution = 110.0; // n_req = 1
  cfg.throughput_threshold = 1.2e8;
  cfg.crb_const_distance = 1e16; // brings range information onto the
  cfg.crb_const_angle = 1.0;     // prior's scale at desk-size n
  return validate_config(cfg);
}

// dense-route objective: trace((J_p + Q^T Sigma^-1 Q)^-1)
double dense_objective(const alloc::FrameProblem& fp, double n, double p_m) {
  const auto& t = fp.targets[0];
  const Mat2 cov =
      dynamics::measurement_cov(p_m * t.link_gain_sq, n, fp.cfg);
  const Mat4 j = t.j_prior + estimation::data_fim(t.jac, cov);
  return estimation::pcrb_trace(j);
}

} // namespace

OracleReport tiny_instance_gap(int n_seeds, std::uint64_t seed0) {
  OracleReport rep{"solver vs exhaustive tiny-instance enumeration", 0, 0.0,
                   0.05, false};
  const ScenarioConfig cfg = tiny_config();
  const auto cb = channel::build_codebook(cfg.num_tx_antennas,
                                          cfg.codebook_size(),
                                          cfg.wavelength());
  for (int s = 0; s < n_seeds; ++s) {
    const std::uint64_t seed = seed0 + s;
    const Scenario scn = generate_scenario(cfg, seed);
    const auto st = harness::init_state(cfg, scn, seed);
    const auto fp = harness::build_frame_problem(st, cfg, cb);

    const int beam = alloc::select_beam(fp.users[0].channel, *fp.codebook);
    const double gain =
        channel::beam_gain_sq(fp.users[0].channel, fp.codebook->beams[beam]);
    const double gamma = fp.users[0].gamma;

    // exhaustive (n, o) with an inner line search on the user power
    double best = std::numeric_limits<double>::infinity();
    const int n_req = cfg.min_rb();
    for (int n = n_req; n <= cfg.num_rbs; ++n) {
      for (int o = 1; o + n <= cfg.num_rbs; ++o) {
        const std::vector<double> o_row(1, static_cast<double>(o));
        auto rate_at = [&](double p) {
          return channel::throughput(std::span<const double>(o_row), p, gain,
                                     cfg);
        };
        // candidate user powers: a uniform grid plus the bisected minimum
        std::vector<double> cands;
        const int grid = 400;
        for (int i = 0; i <= grid; ++i)
          cands.push_back(cfg.total_power * i / grid);
        if (rate_at(cfg.total_power) >= gamma) {
          double lo = 0.0, hi = cfg.total_power;
          for (int it = 0; it < 80; ++it) {
            const double mid = 0.5 * (lo + hi);
            (rate_at(mid) >= gamma ? hi : lo) = mid;
          }
          cands.push_back(hi * (1.0 + 1e-9));
        }
        for (double pk : cands) {
          if (rate_at(pk) < gamma) continue;
          const double pm = cfg.total_power - pk;
          if (!(pm > 0.0)) continue;
          best = std::min(best, dense_objective(fp, n, pm));
        }
      }
    }
    if (!std::isfinite(best)) continue; // QoS infeasible for this draw

    const auto [a, diag] =
        alloc::bcd_solve(fp, alloc::solver_options_from(cfg));
    const double got =
        dense_objective(fp, a.target_rbs[0], a.target_powers[0]);
    const double gap = (got - best) / best;
    rep.worst = std::max(rep.worst, gap);
    ++rep.cases;
  }
  rep.pass = rep.worst <= rep.tolerance && rep.cases > 0;
  return rep;
}

OracleReport qos_gradient_fd(int points, std::uint64_t seed) {
  OracleReport rep{"QoS-gap gradient vs central differences", 0, 0.0, 1e-5,
                   false};
  ScenarioConfig cfg;
  cfg = validate_config(cfg);
  auto rng = make_rng(seed, 0x51475244ull);
  std::uniform_real_distribution<double> uo(1.0, 264.0);
  std::uniform_real_distribution<double> up(0.1, 100.0);
  std::uniform_real_distribution<double> ug(1e-8, 1e-5);
  const int slots = 8;
  for (int it = 0; it < points; ++it) {
    std::vector<double> o(slots);
    for (auto& v : o) v = uo(rng);
    const double p = up(rng);
    const double gain = ug(rng);
    const double gamma = 1e6;
    const auto gap = channel::qos_gap(o, p, gain, gamma, cfg);

    auto value_at = [&](const std::vector<double>& oo, double pp) {
      return channel::qos_gap(oo, pp, gain, gamma, cfg).value;
    };
    for (int i = 0; i < slots; ++i) {
      const double h = std::max(1e-6 * o[i], 1e-7);
      auto op = o, om = o;
      op[i] += h;
      om[i] -= h;
      const double fd = (value_at(op, p) - value_at(om, p)) / (2.0 * h);
      const double err = std::abs(gap.grad_rbs[i] - fd) /
                         std::max(std::abs(fd), 1e-9);
      rep.worst = std::max(rep.worst, err);
    }
    const double hp = std::max(1e-6 * p, 1e-9);
    const double fdp =
        (value_at(o, p + hp) - value_at(o, p - hp)) / (2.0 * hp);
    rep.worst = std::max(rep.worst,
                         std::abs(gap.grad_power - fdp) /
                             std::max(std::abs(fdp), 1e-9));
    ++rep.cases;
  }
  rep.pass = rep.worst <= rep.tolerance;
  return rep;
}

OracleReport jacobian_fd(int points, std::uint64_t seed) {
  OracleReport rep{"measurement Jacobian vs central differences", 0, 0.0,
                   1e-6, false};
  auto rng = make_rng(seed, 0x4a414331ull);
  std::uniform_real_distribution<double> ux(-200.0, 200.0);
  std::uniform_real_distribution<double> uv(-10.0, 10.0);
  for (int it = 0; it < points; ++it) {
    Vec4 s;
    do {
      s << ux(rng), ux(rng), uv(rng), uv(rng);
    } while (s.head<2>().norm() < 1.0);
    const Mat24 jac = dynamics::measurement_jacobian(s);
    for (int col = 0; col < 4; ++col) {
      const double h = 1e-5;
      Vec4 sp = s, sm = s;
      sp[col] += h;
      sm[col] -= h;
      const auto pp = dynamics::to_polar(sp);
      const auto pm = dynamics::to_polar(sm);
      const double fd_d = (pp.distance - pm.distance) / (2.0 * h);
      const double fd_phi =
          dynamics::wrap_angle(pp.angle - pm.angle) / (2.0 * h);
      const double scale_d = std::max(std::abs(fd_d), 1e-3);
      const double scale_phi = std::max(std::abs(fd_phi), 1e-3);
      rep.worst = std::max(rep.worst, std::abs(jac(0, col) - fd_d) / scale_d);
      rep.worst =
          std::max(rep.worst, std::abs(jac(1, col) - fd_phi) / scale_phi);
    }
    ++rep.cases;
  }
  rep.pass = rep.worst <= rep.tolerance;
  return rep;
}

std::vector<OracleReport> run_all(std::uint64_t seed) {
  return {scalarization_identity(1000, seed), power_block_grid(100, 10000, seed),
          tiny_instance_gap(50, seed), qos_gradient_fd(100, seed),
          jacobian_fd(1000, seed)};
}

} // namespace isac::oracle
