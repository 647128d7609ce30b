// SPDX-License-Identifier: Apache-2.0
//
// Independent cross-checks for the numerically load-bearing pieces. Each
// oracle re-derives its expected values by a different route than the
// implementation it checks (dense inverses, grid searches, exhaustive
// enumeration, finite differences).

#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace isac::oracle {

struct OracleReport {
  std::string name;
  int cases = 0;
  double worst = 0.0;      // worst observed error / gap
  double tolerance = 0.0;  // pass threshold
  bool pass = false;
};

// Scalarized trace identity vs a dense matrix inverse over random
// positive-definite E and rank-1 V, for n in {1, 10, 70, 264}.
OracleReport scalarization_identity(int instances, std::uint64_t seed);

// Water-filling vs a dense grid search on random two-target instances.
OracleReport power_block_grid(int instances, int grid_points,
                              std::uint64_t seed);

// Full solver vs exhaustive integer enumeration with an inner power line
// search on one-target/one-user/one-mini-slot instances. Reports the worst
// relative objective gap.
OracleReport tiny_instance_gap(int n_seeds, std::uint64_t seed0);

// Analytic QoS-gap gradient vs central finite differences.
OracleReport qos_gradient_fd(int points, std::uint64_t seed);

// Range/bearing Jacobian vs central finite differences.
OracleReport jacobian_fd(int points, std::uint64_t seed);

std::vector<OracleReport> run_all(std::uint64_t seed);

} // namespace isac::oracle
