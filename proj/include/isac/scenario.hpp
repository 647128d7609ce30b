// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "isac/types.hpp"

namespace isac {

struct Scenario {
  std::vector<TargetState> targets;
  std::vector<UserState> users;
};

// Draws initial target and user states. Pure function of (cfg, seed):
// target positions uniform on [0, 200] x [-100, 100] m, speeds uniform on
// [0, 30] km/h with uniform heading; users at 20..40 m in the front sector
// with geometric mmWave channels. Target FIM/EKF fields are initialized from
// the loose prior diag(10^2, 10^2, 5^2, 5^2).
Scenario generate_scenario(const ScenarioConfig& cfg, std::uint64_t seed);

// Prior standard deviations used to seed the FIM and the EKF.
inline constexpr double kInitPosStd = 10.0; // m
inline constexpr double kInitVelStd = 5.0;  // m/s

} // namespace isac
