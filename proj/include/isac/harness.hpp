// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "isac/allocator.hpp"
#include "isac/scenario.hpp"

namespace isac::harness {

enum class Method { proposed, rftep, upper_bound };

std::string method_name(Method m);
Method method_from_name(const std::string& name);

struct EkfTrack {
  Vec4 estimate = Vec4::Zero();
  Mat4 cov = Mat4::Identity();
  Mat4 fim = Mat4::Identity();
  Mat4 fim_inv = Mat4::Identity();
};

// Mutable per-episode world + tracker state. The allocator never sees
// true_targets; frame problems are built from tracks and channels only.
struct FrameState {
  std::vector<Vec4> true_targets;
  std::vector<EkfTrack> tracks;
  std::vector<Vec4> dead_reckoned; // prediction-only baseline trajectories
  std::vector<CVec> channels;
  std::vector<double> innovation_var;
  std::vector<double> gammas;
  int frame = 0;
};

struct EpisodeResult {
  Method method = Method::proposed;
  std::uint64_t seed = 0;
  std::vector<FrameMetrics> frames;
  std::vector<std::vector<Vec4>> true_traj; // [frame][target]
  std::vector<std::vector<Vec4>> est_traj;
  std::vector<std::vector<Vec4>> dr_traj;
  std::vector<Allocation> allocations;
};

FrameState init_state(const ScenarioConfig& cfg, const Scenario& scn,
                      std::uint64_t seed);

// Prediction stage: EKF state/covariance prediction, prior FIM, predicted
// links. Reads tracks and channels only.
alloc::FrameProblem build_frame_problem(const FrameState& state,
                                        const ScenarioConfig& cfg,
                                        const channel::Codebook& cb);

Allocation rftep_allocation(const alloc::FrameProblem& fp,
                            std::mt19937_64& rng);

// Budget-exempt bound: every entity gets the full grid and P_max.
Allocation upper_bound_allocation(const alloc::FrameProblem& fp);

Allocation allocate_frame(const alloc::FrameProblem& fp, Method method,
                          std::uint64_t seed, int frame,
                          alloc::SolveDiagnostics* diag = nullptr);

// Transmission, measurement, tracking update, then world advance (true-state
// propagation and channel aging). Noise streams derive from (seed, frame,
// index) independently of the method so paired runs share realizations.
FrameMetrics run_frame(FrameState& state, const alloc::FrameProblem& fp,
                       const Allocation& alloc_in, const ScenarioConfig& cfg,
                       std::uint64_t seed,
                       const alloc::SolveDiagnostics* diag = nullptr);

EpisodeResult run_episode(const ScenarioConfig& cfg, Method method,
                          std::uint64_t seed);

struct MethodAggregate {
  Method method = Method::proposed;
  std::vector<double> mean_pcrb;       // per frame, over targets and trials
  std::vector<double> qos_ratio;       // per frame, over users and trials
  std::vector<double> position_rmse;   // per frame
  std::vector<double> dead_reckon_rmse;
  std::vector<double> mean_throughput;
  double mean_pcrb_total = 0.0;
  double qos_ratio_total = 0.0;
};

struct MonteCarloResult {
  std::vector<MethodAggregate> aggregates; // one per method, input order
  std::vector<EpisodeResult> episodes;     // trial-major, then method
};

// Trials run on seeds seed..seed+n-1, possibly concurrently; aggregation
// is an ordered reduction so the result is independent of scheduling.
MonteCarloResult monte_carlo(const ScenarioConfig& cfg,
                             std::span<const Method> methods, int n_trials,
                             bool keep_episodes = true);

struct SweepPoint {
  double gamma = 0.0;
  double mean_pcrb = 0.0;
  double qos_ratio = 0.0;
};

// Fig.-4 style trade-off: a full Monte Carlo of the proposed method per
// threshold value.
std::vector<SweepPoint> tradeoff_sweep(const ScenarioConfig& cfg,
                                       std::span<const double> gammas,
                                       int n_trials);

} // namespace isac::harness
