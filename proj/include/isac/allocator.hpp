// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <utility>
#include <vector>

#include "isac/channel.hpp"
#include "isac/estimation.hpp"
#include "isac/types.hpp"

namespace isac::alloc {

struct InfeasibleError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ceil(c / (2 B0 d_res)): RBs needed for the requested range resolution.
int min_rb_requirement(double rb_bandwidth, double distance_resolution);

// One-dimensional codebook search; the SNR scaling is positive, so the
// argmax reduces to |h . beam|^2. Ties break to the lowest index.
int select_beam(const CVec& h, const channel::Codebook& cb);

// Everything the per-frame solver is allowed to see about a target:
// predicted quantities only.
struct TargetPrediction {
  Mat4 j_prior = Mat4::Identity();   // prior FIM
  Mat4 prior_cov = Mat4::Identity(); // its inverse, carried by the tracker
  Mat24 jac = Mat24::Zero();         // measurement Jacobian at the prediction
  double link_gain_sq = 0.0;         // ||H a_t(aod)||^2 at the predicted state
  double aod = 0.0;                  // predicted angle of departure
};

struct UserLink {
  CVec channel;
  double gamma = 0.0; // throughput threshold, bits
};

struct FrameProblem {
  std::vector<TargetPrediction> targets;
  std::vector<UserLink> users;
  const channel::Codebook* codebook = nullptr;
  ScenarioConfig cfg;
};

// Continuous relaxation of one frame's decision; user_rbs is K*I row-major.
struct RelaxedAllocation {
  std::vector<double> target_rbs;
  std::vector<double> user_rbs;
  std::vector<double> user_powers;
  std::vector<std::array<double, 4>> aux; // z_mj, filled at return
};

struct SolveDiagnostics {
  int outer_iterations = 0;
  std::vector<int> sca_iterations;       // per penalty round
  double penalty_final = 0.0;
  std::vector<double> objective_trace;   // per accepted outer iteration
  double kkt_residual = 0.0;
  bool feasibility_repair_applied = false;
};

struct SolverOptions {
  int max_outer = 50;
  int sca_max = 30;
  int subgrad_max = 5000;
  double kkt_tol = 1e-6;
  int penalty_rounds = 10;
  bool exchange_search = true;   // n<->o reallocation scored by the true objective
  bool check_invariants = false; // assert SCA inner-approximation feasibility
};

SolverOptions solver_options_from(const ScenarioConfig& cfg);

// Water-filling for the power block: minimizes
// sum_m sum_j 1/(a_mj + b_mj p_m) s.t. sum p_m <= budget, p_m >= 0,
// by bisection on the KKT multiplier. Marginals equalize to within
// 1e-8 * budget of the budget constraint.
std::vector<double> solve_power_block(
    std::span<const estimation::ScalarizedPcrb> scal, double budget);

// SCA + penalty solve of the {n_m, o_ki, p_k} block at fixed target powers
// and user beams. user_gain_sq holds |h_k . f_k|^2 for the fixed beams.
std::pair<RelaxedAllocation, SolveDiagnostics> solve_bandwidth_power_block(
    const FrameProblem& fp, std::span<const double> target_powers,
    std::span<const double> user_gain_sq, const RelaxedAllocation* warm,
    const SolverOptions& opt);

// Floor-and-repair integer projection. Leftover RUs go to QoS-violating
// users first (largest fractional part), then top up users to the ceiling
// of their relaxed value; remaining QoS gaps are repaired by raising user
// powers within the budget. Target RB counts never exceed their relaxed
// values, so the rounded objective stays above the relaxed one.
Allocation round_and_repair(const RelaxedAllocation& relaxed,
                            const FrameProblem& fp,
                            std::span<const double> target_powers,
                            std::span<const int> beams,
                            std::span<const double> user_gain_sq,
                            bool* repair_applied = nullptr);

// Full per-frame block-coordinate descent (Algorithm 1): alternates the
// bandwidth/power block with beam selection and target-power water-filling
// until the objective reduction falls below convergence_tol.
std::pair<Allocation, SolveDiagnostics> bcd_solve(const FrameProblem& fp,
                                                  const SolverOptions& opt);

// True posterior objective sum_m trace(J_m^-1) at a resource tuple,
// evaluated through rank-one downdates of the prior covariance.
double true_objective(const FrameProblem& fp, std::span<const double> n_rbs,
                      std::span<const double> target_powers);

} // namespace isac::alloc
