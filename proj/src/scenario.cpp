// SPDX-License-Identifier: Apache-2.0

#include "isac/scenario.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "isac/channel.hpp"
#include "isac/rng.hpp"

namespace isac {

using std::numbers::pi;

Scenario generate_scenario(const ScenarioConfig& cfg, std::uint64_t seed) {
  validate_config(cfg);
  auto rng = make_rng(seed, stream::scenario);

  std::uniform_real_distribution<double> ux(0.0, 200.0);
  std::uniform_real_distribution<double> uy(-100.0, 100.0);
  std::uniform_real_distribution<double> uspeed(0.0, 30.0 / 3.6); // m/s
  std::uniform_real_distribution<double> uheading(0.0, 2.0 * pi);
  std::uniform_real_distribution<double> udist(20.0, 40.0);
  std::uniform_real_distribution<double> uangle(-pi / 2.0, pi / 2.0);

  Mat4 prior_cov = Mat4::Zero();
  prior_cov.diagonal() << kInitPosStd * kInitPosStd, kInitPosStd * kInitPosStd,
      kInitVelStd * kInitVelStd, kInitVelStd * kInitVelStd;
  Mat4 prior_fim = Mat4::Zero();
  prior_fim.diagonal() = prior_cov.diagonal().cwiseInverse();

  Scenario scn;
  scn.targets.reserve(cfg.num_targets);
  for (int m = 0; m < cfg.num_targets; ++m) {
    TargetState t;
    double x, y;
    do { // keep clear of the array origin (near-field guard at 0.1 m)
      x = ux(rng);
      y = uy(rng);
    } while (x * x + y * y < 0.01);
    const double speed = uspeed(rng);
    const double heading = uheading(rng);
    t.state << x, y, speed * std::cos(heading), speed * std::sin(heading);
    t.fim = prior_fim;
    t.fim_inv = prior_cov;
    t.ekf_cov = prior_cov;
    t.ekf_estimate = t.state; // harness adds the prior draw from its own stream
    scn.targets.push_back(std::move(t));
  }

  scn.users.reserve(cfg.num_users);
  for (int k = 0; k < cfg.num_users; ++k) {
    UserState u;
    const double d = udist(rng);
    const double a = uangle(rng);
    u.position << d * std::cos(a), d * std::sin(a);
    u.channel = channel::initial_comm_channel(cfg, d, rng);
    u.throughput_threshold = cfg.throughput_threshold;
    u.innovation_var = cfg.channel_innovation_var > 0.0
                           ? cfg.channel_innovation_var
                           : cfg.pathloss_const / (d * d);
    scn.users.push_back(std::move(u));
  }
  return scn;
}

} // namespace isac
