// SPDX-License-Identifier: Apache-2.0

#include "isac/types.hpp"

#include <sstream>

namespace isac {

int Allocation::ru_total() const {
  long long total = 0;
  for (int n : target_rbs) total += n;
  for (const auto& row : user_rbs)
    for (int o : row) total += o;
  return static_cast<int>(total);
}

double Allocation::power_total() const {
  double total = 0.0;
  for (double p : target_powers) total += p;
  for (double p : user_powers) total += p;
  return total;
}

void Allocation::validate(const ScenarioConfig& cfg) const {
  std::vector<std::string> bad;
  const int n_req = cfg.min_rb();
  const std::size_t m = target_rbs.size();
  if (target_powers.size() != m) bad.push_back("target_powers size mismatch");
  if (user_rbs.size() != user_powers.size() ||
      user_rbs.size() != user_beam_idx.size())
    bad.push_back("user vector size mismatch");

  for (std::size_t i = 0; i < m; ++i) {
    if (target_rbs[i] < n_req || target_rbs[i] > cfg.num_rbs) {
      std::ostringstream os;
      os << "target " << i << " rbs " << target_rbs[i] << " outside ["
         << n_req << ", " << cfg.num_rbs << "]";
      bad.push_back(os.str());
    }
    if (!(target_powers[i] >= 0.0)) {
      std::ostringstream os;
      os << "target " << i << " power " << target_powers[i] << " negative";
      bad.push_back(os.str());
    }
  }
  for (std::size_t k = 0; k < user_rbs.size(); ++k) {
    if (static_cast<int>(user_rbs[k].size()) != cfg.num_minislots_per_frame)
      bad.push_back("user mini-slot row length mismatch");
    for (int o : user_rbs[k])
      if (o < 1 || o > cfg.num_rbs) {
        std::ostringstream os;
        os << "user " << k << " rbs " << o << " outside [1, " << cfg.num_rbs
           << "]";
        bad.push_back(os.str());
        break;
      }
    if (!(user_powers[k] >= 0.0)) {
      std::ostringstream os;
      os << "user " << k << " power " << user_powers[k] << " negative";
      bad.push_back(os.str());
    }
  }

  if (!budget_exempt) {
    const long long cap =
        static_cast<long long>(cfg.num_minislots_per_frame) * cfg.num_rbs;
    if (ru_total() > cap) {
      std::ostringstream os;
      os << "RU budget exceeded: " << ru_total() << " > " << cap;
      bad.push_back(os.str());
    }
    if (power_total() > cfg.total_power * (1.0 + 1e-9)) {
      std::ostringstream os;
      os << "power budget exceeded: " << power_total() << " > "
         << cfg.total_power;
      bad.push_back(os.str());
    }
  }

  if (!bad.empty()) {
    std::string msg = "invalid allocation:";
    for (const auto& b : bad) msg += "\n  - " + b;
    throw std::invalid_argument(msg);
  }
}

} // namespace isac
