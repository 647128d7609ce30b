// SPDX-License-Identifier: Apache-2.0

#include "isac/allocator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "isac/kernels.hpp"

namespace isac::alloc {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

int min_rb_requirement(double rb_bandwidth, double distance_resolution) {
  if (!(rb_bandwidth > 0.0) || !(distance_resolution > 0.0))
    throw std::invalid_argument("min_rb_requirement: arguments must be > 0");
  return static_cast<int>(
      std::ceil(299792458.0 / (2.0 * rb_bandwidth * distance_resolution)));
}

int select_beam(const CVec& h, const channel::Codebook& cb) {
  if (cb.beams.empty())
    throw std::invalid_argument("select_beam: empty codebook");
  int best = 0;
  double best_gain = -1.0;
  for (std::size_t n = 0; n < cb.beams.size(); ++n) {
    const double g = channel::beam_gain_sq(h, cb.beams[n]);
    if (g > best_gain) {
      best_gain = g;
      best = static_cast<int>(n);
    }
  }
  return best;
}

SolverOptions solver_options_from(const ScenarioConfig& cfg) {
  SolverOptions opt;
  opt.max_outer = cfg.bcd_max_outer;
  return opt;
}

// --- water-filling ---------------------------------------------------------

namespace {

// Root of marginal(p) = mu for one target, clamped to [0, cap]. marginal is
// positive, strictly decreasing and convex, so damped Newton from 0 is safe.
double power_root(const estimation::ScalarizedPcrb& s, double mu, double cap) {
  if (s.marginal(0.0) <= mu) return 0.0;
  if (s.marginal(cap) >= mu) return cap;
  double p = 0.0;
  for (int it = 0; it < 200; ++it) {
    const double f = s.marginal(p) - mu;
    if (std::abs(f) <= 1e-14 * mu) break;
    double deriv = 0.0;
    for (int j = 0; j < 4; ++j) {
      const double den = s.a[j] + s.b[j] * p;
      deriv -= 2.0 * s.b[j] * s.b[j] / (den * den * den);
    }
    double step = -f / deriv; // deriv < 0, f > 0 -> step > 0 while below root
    double next = p + step;
    if (!(next > p) || next > cap) next = 0.5 * (p + cap);
    if (s.marginal(next) < mu)
      cap = next; // overshot; keep as upper bracket
    else
      p = next;
    if (cap - p <= 1e-15 * std::max(1.0, cap)) break;
  }
  return p;
}

} // namespace

std::vector<double> solve_power_block(
    std::span<const estimation::ScalarizedPcrb> scal, double budget) {
  if (!(budget > 0.0)) {
    std::ostringstream os;
    os << "power block infeasible: nonpositive target budget " << budget
       << " (user powers exhaust P_max)";
    throw InfeasibleError(os.str());
  }
  const std::size_t m = scal.size();
  std::vector<double> p(m, 0.0);
  double mu_hi = 0.0, mu_lo = kInf;
  bool any_active = false;
  for (const auto& s : scal) {
    const double m0 = s.marginal(0.0);
    if (m0 > 0.0) {
      any_active = true;
      mu_hi = std::max(mu_hi, m0);
      const double mb = s.marginal(budget);
      if (mb > 0.0) mu_lo = std::min(mu_lo, mb);
    }
  }
  if (!any_active) return p; // objective independent of power
  if (!std::isfinite(mu_lo)) mu_lo = mu_hi * 1e-30;
  mu_lo = std::min(mu_lo * 0.5, mu_hi * 0.5);

  auto total_at = [&](double mu) {
    double t = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      p[i] = power_root(scal[i], mu, budget);
      t += p[i];
    }
    return t;
  };

  // total_at decreases in mu; log-bisection brackets the budget
  double total = 0.0;
  for (int it = 0; it < 200; ++it) {
    const double mu = std::sqrt(mu_lo * mu_hi);
    total = total_at(mu);
    if (std::abs(total - budget) <= 1e-9 * budget) break;
    if (total > budget)
      mu_lo = mu;
    else
      mu_hi = mu;
    if (mu_hi - mu_lo <= 1e-16 * mu_hi) {
      total = total_at(std::sqrt(mu_lo * mu_hi));
      break;
    }
  }
  if (total > budget) // keep the hard budget exact
    for (auto& v : p) v *= budget / total;
  return p;
}

// --- block {n, o, p_k}: SCA + penalty + projected subgradient --------------

namespace {

struct Block1Workspace {
  const FrameProblem* fp = nullptr;
  int m = 0, k = 0, slots = 0;
  double ru_budget = 0.0;
  double p_budget = 0.0;
  double t0fac = 1.0;
  double n_req = 1.0;

  std::vector<estimation::ScalarizedPcrb> scal; // bandwidth pairs per target
  std::vector<double> snr_scale;                // |h f|^2 / N0 per user
  std::vector<double> gamma;

  // variables: no = [n (m) | o (k*slots)], p = [p_k]
  std::vector<double> no, p;
  std::vector<double> lo_no, hi_no, lo_p, hi_p;
  std::vector<double> nstar;

  // scratch
  std::vector<double> grad_no, grad_p, rate_grad;

  double* o_row(int user) { return no.data() + m + user * slots; }
  const double* o_row(int user) const { return no.data() + m + user * slots; }
};

double lin_term(double nstar, double n) { return nstar * (2.0 * n - nstar); }

// keeps a + b*lin(n) comfortably positive inside the box
void refresh_linearization(Block1Workspace& ws) {
  for (int i = 0; i < ws.m; ++i) {
    ws.nstar[i] = ws.no[i];
    double lb = ws.n_req;
    const auto& s = ws.scal[i];
    for (int j = 0; j < 4; ++j) {
      if (s.b[j] > 0.0) {
        const double bound =
            (ws.nstar[i] * ws.nstar[i] - 0.999 * s.a[j] / s.b[j]) /
            (2.0 * ws.nstar[i]);
        lb = std::max(lb, bound);
      }
    }
    ws.lo_no[i] = lb;
  }
}

void project_group(std::vector<double>& x, const double* lo, const double* hi,
                   std::size_t off, std::size_t len, double cap) {
  double* v = x.data() + off;
  double total = kernels::sum_shift_clamped(v, lo + off, hi + off, len, 0.0);
  if (total <= cap + 1e-12 * std::max(1.0, cap)) {
    kernels::shift_clamp(v, lo + off, hi + off, len, 0.0);
    return;
  }
  double s_lo = 0.0, s_hi = 0.0;
  for (std::size_t i = 0; i < len; ++i)
    s_hi = std::max(s_hi, v[i] - lo[off + i]);
  for (int it = 0; it < 100; ++it) {
    const double mid = 0.5 * (s_lo + s_hi);
    if (kernels::sum_shift_clamped(v, lo + off, hi + off, len, mid) > cap)
      s_lo = mid;
    else
      s_hi = mid;
  }
  kernels::shift_clamp(v, lo + off, hi + off, len, s_hi);
}

void project(Block1Workspace& ws) {
  project_group(ws.no, ws.lo_no.data(), ws.hi_no.data(), 0, ws.no.size(),
                ws.ru_budget);
  project_group(ws.p, ws.lo_p.data(), ws.hi_p.data(), 0, ws.p.size(),
                ws.p_budget);
}

double violation(const Block1Workspace& ws) {
  double viol = 0.0;
  for (int k = 0; k < ws.k; ++k) {
    const double s = ws.p[k] * ws.snr_scale[k];
    const double rate = kernels::rate_sum(
        ws.o_row(k), ws.slots, ws.fp->cfg.rb_bandwidth, s);
    viol += std::max(ws.gamma[k] - ws.t0fac * rate, 0.0);
  }
  return viol;
}

// penalized objective; reducible sensing terms only (b_j > 0), gradient
// written into grad_no/grad_p when grad is set
double eval_subgradient(Block1Workspace& ws, double beta, bool grad) {
  if (grad) {
    std::fill(ws.grad_no.begin(), ws.grad_no.end(), 0.0);
    std::fill(ws.grad_p.begin(), ws.grad_p.end(), 0.0);
  }
  double f = 0.0;
  for (int i = 0; i < ws.m; ++i) {
    const auto& s = ws.scal[i];
    const double lin = lin_term(ws.nstar[i], ws.no[i]);
    for (int j = 0; j < 4; ++j) {
      if (s.b[j] <= 0.0) continue;
      const double den = s.a[j] + s.b[j] * lin;
      f += 1.0 / den;
      if (grad) ws.grad_no[i] -= 2.0 * ws.nstar[i] * s.b[j] / (den * den);
    }
  }
  constexpr double kInvLn2 = 1.4426950408889634074;
  for (int k = 0; k < ws.k; ++k) {
    const double c = ws.snr_scale[k];
    const double s = ws.p[k] * c;
    double inv_sum = 0.0;
    const double rate = kernels::rate_sum_grad(
        ws.o_row(k), ws.slots, ws.fp->cfg.rb_bandwidth, s,
        grad ? ws.rate_grad.data() : nullptr, &inv_sum);
    const double gap = ws.gamma[k] - ws.t0fac * rate;
    if (gap > 0.0) {
      f += beta * gap;
      if (grad) {
        double* go = ws.grad_no.data() + ws.m + k * ws.slots;
        for (int i = 0; i < ws.slots; ++i)
          go[i] -= beta * ws.t0fac * ws.rate_grad[i];
        ws.grad_p[k] -= beta * ws.t0fac * c * kInvLn2 * inv_sum;
      }
    }
  }
  return f;
}

// full block objective (constants included) used for SCA convergence
double block_phi(const Block1Workspace& ws, double beta) {
  double f = 0.0;
  for (int i = 0; i < ws.m; ++i)
    f += ws.scal[i].eval(ws.no[i] * ws.no[i]);
  return f + beta * violation(ws);
}

// Polyak-style projected subgradient with restarts on the current
// linearization; returns the adaptive-target level at exit.
double subgradient_solve(Block1Workspace& ws, double beta,
                         const SolverOptions& opt, int* iters_used) {
  project(ws);
  std::vector<double> best_no = ws.no, best_p = ws.p;
  double f_best = eval_subgradient(ws, beta, false);
  double delta_rel = 0.1;
  int stall = 0;
  const double s_no = static_cast<double>(ws.fp->cfg.num_rbs);
  const double s_p = std::max(ws.p_budget, 1e-300);
  int t = 0;
  for (; t < opt.subgrad_max; ++t) {
    const double f = eval_subgradient(ws, beta, true);
    if (f < f_best - 1e-14 * std::max(1.0, std::abs(f_best))) {
      f_best = f;
      best_no = ws.no;
      best_p = ws.p;
      stall = 0;
    } else if (++stall >= 8) {
      delta_rel *= 0.5;
      stall = 0;
      ws.no = best_no;
      ws.p = best_p;
      if (delta_rel < opt.kkt_tol) break;
      continue;
    }
    double gnorm2 = 0.0;
    for (double g : ws.grad_no) gnorm2 += (g * s_no) * (g * s_no);
    for (double g : ws.grad_p) gnorm2 += (g * s_p) * (g * s_p);
    if (gnorm2 <= 1e-300) break;
    const double delta = delta_rel * std::max(std::abs(f_best), 1e-300);
    const double step = (f - (f_best - delta)) / gnorm2;
    for (std::size_t i = 0; i < ws.no.size(); ++i)
      ws.no[i] -= step * ws.grad_no[i] * s_no * s_no;
    for (std::size_t i = 0; i < ws.p.size(); ++i)
      ws.p[i] -= step * ws.grad_p[i] * s_p * s_p;
    project(ws);
  }
  ws.no = best_no;
  ws.p = best_p;
  if (iters_used) *iters_used += t;
  return delta_rel;
}

// minimal user powers meeting gamma at floored RB counts; returns the
// residual QoS violation (bits) that no power within the budget can close
double min_user_powers(const Block1Workspace& ws, std::vector<double>& p_out) {
  const auto& cfg = ws.fp->cfg;
  std::vector<double> o_floor(ws.slots);
  p_out.assign(ws.k, 0.0);
  double residual = 0.0;
  for (int k = 0; k < ws.k; ++k) {
    const double gamma = ws.gamma[k];
    if (gamma <= 0.0) continue;
    const double c = ws.snr_scale[k];
    for (int i = 0; i < ws.slots; ++i)
      o_floor[i] = std::max(1.0, std::floor(ws.o_row(k)[i] + 1e-9));
    auto rate_at = [&](double p) {
      return ws.t0fac * kernels::rate_sum(o_floor.data(), ws.slots,
                                          cfg.rb_bandwidth, p * c);
    };
    if (c <= 0.0 || rate_at(ws.p_budget) < gamma) {
      p_out[k] = c > 0.0 ? ws.p_budget : 0.0;
      residual += gamma - rate_at(p_out[k]);
      continue;
    }
    double lo = 0.0, hi = ws.p_budget;
    for (int it = 0; it < 90; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (rate_at(mid) >= gamma)
        hi = mid;
      else
        lo = mid;
    }
    p_out[k] = std::min(hi * (1.0 + 1e-9), ws.p_budget);
  }
  double total = std::accumulate(p_out.begin(), p_out.end(), 0.0);
  if (total > ws.p_budget) { // jointly unattainable; report the gap honestly
    const double scale = ws.p_budget / total;
    for (int k = 0; k < ws.k; ++k) p_out[k] *= scale;
    residual += 1.0; // nonzero marker; exact gap recomputed by callers
  }
  return residual;
}

Block1Workspace make_workspace(const FrameProblem& fp,
                               std::span<const double> target_powers,
                               std::span<const double> user_gain_sq) {
  const auto& cfg = fp.cfg;
  Block1Workspace ws;
  ws.fp = &fp;
  ws.m = static_cast<int>(fp.targets.size());
  ws.k = static_cast<int>(fp.users.size());
  ws.slots = cfg.num_minislots_per_frame;
  ws.ru_budget = static_cast<double>(cfg.num_minislots_per_frame) *
                 cfg.num_rbs;
  ws.t0fac = cfg.throughput_in_bits ? cfg.minislot_duration : 1.0;
  ws.n_req = cfg.min_rb();

  double p_used = 0.0;
  for (double p : target_powers) p_used += p;
  ws.p_budget = std::max(cfg.total_power - p_used, 0.0);
  bool users_need_power = false;
  for (const auto& u : fp.users)
    if (u.gamma > 0.0) users_need_power = true;
  if (users_need_power && !(ws.p_budget > 0.0)) {
    std::ostringstream os;
    os << "bandwidth/power block infeasible: target powers " << p_used
       << " W leave no budget for users with positive thresholds (P_max = "
       << cfg.total_power << ")";
    throw InfeasibleError(os.str());
  }

  ws.scal.reserve(ws.m);
  for (int i = 0; i < ws.m; ++i)
    ws.scal.push_back(estimation::scalarize_bandwidth(
        fp.targets[i].j_prior, fp.targets[i].link_gain_sq, target_powers[i],
        fp.targets[i].jac, cfg));

  ws.snr_scale.resize(ws.k);
  ws.gamma.resize(ws.k);
  for (int k = 0; k < ws.k; ++k) {
    ws.snr_scale[k] = user_gain_sq[k] / cfg.noise_psd;
    ws.gamma[k] = fp.users[k].gamma;
  }

  const std::size_t n_no = ws.m + static_cast<std::size_t>(ws.k) * ws.slots;
  ws.no.assign(n_no, 0.0);
  ws.lo_no.assign(n_no, 1.0);
  ws.hi_no.assign(n_no, static_cast<double>(cfg.num_rbs));
  for (int i = 0; i < ws.m; ++i) ws.lo_no[i] = ws.n_req;
  ws.p.assign(ws.k, 0.0);
  ws.lo_p.assign(ws.k, 0.0);
  ws.hi_p.assign(ws.k, ws.p_budget);
  ws.nstar.assign(ws.m, ws.n_req);
  ws.grad_no.assign(n_no, 0.0);
  ws.grad_p.assign(ws.k, 0.0);
  ws.rate_grad.assign(ws.slots, 0.0);
  return ws;
}

void load_warm(Block1Workspace& ws, const RelaxedAllocation* warm) {
  const auto& cfg = ws.fp->cfg;
  if (warm && static_cast<int>(warm->target_rbs.size()) == ws.m &&
      warm->user_rbs.size() == static_cast<std::size_t>(ws.k) * ws.slots &&
      static_cast<int>(warm->user_powers.size()) == ws.k) {
    std::copy(warm->target_rbs.begin(), warm->target_rbs.end(),
              ws.no.begin());
    std::copy(warm->user_rbs.begin(), warm->user_rbs.end(),
              ws.no.begin() + ws.m);
    ws.p = warm->user_powers;
  } else {
    const double spread =
        (ws.ru_budget - ws.m * ws.n_req) /
        std::max(1.0, static_cast<double>(ws.k) * ws.slots);
    const double o0 = std::clamp(spread, 1.0, double(cfg.num_rbs));
    for (int i = 0; i < ws.m; ++i) ws.no[i] = ws.n_req;
    std::fill(ws.no.begin() + ws.m, ws.no.end(), o0);
    std::fill(ws.p.begin(), ws.p.end(),
              std::min(ws.p_budget / std::max(1, ws.k),
                       cfg.total_power /
                           std::max(1, ws.m + ws.k)));
  }
  project(ws);
}

void check_sca_feasibility(const Block1Workspace& ws) {
  double total = 0.0;
  for (std::size_t i = 0; i < ws.no.size(); ++i) total += ws.no[i];
  if (total > ws.ru_budget * (1.0 + 1e-9))
    throw std::logic_error("SCA iterate violates the RU budget");
  for (int i = 0; i < ws.m; ++i) {
    const double n = ws.no[i];
    const double lin = lin_term(ws.nstar[i], n);
    if (lin > n * n + 1e-6 * std::max(1.0, n * n))
      throw std::logic_error(
          "SCA linearization exceeds n^2: inner approximation violated");
    if (n < ws.n_req - 1e-9 || n > ws.fp->cfg.num_rbs + 1e-9)
      throw std::logic_error("SCA iterate violates RB bounds");
  }
}

RelaxedAllocation extract(const Block1Workspace& ws) {
  RelaxedAllocation r;
  r.target_rbs.assign(ws.no.begin(), ws.no.begin() + ws.m);
  r.user_rbs.assign(ws.no.begin() + ws.m, ws.no.end());
  r.user_powers = ws.p;
  r.aux.resize(ws.m);
  for (int i = 0; i < ws.m; ++i) {
    const double n2 = ws.no[i] * ws.no[i];
    for (int j = 0; j < 4; ++j)
      r.aux[i][j] = 1.0 / (ws.scal[i].a[j] + ws.scal[i].b[j] * n2);
  }
  return r;
}

} // namespace

std::pair<RelaxedAllocation, SolveDiagnostics> solve_bandwidth_power_block(
    const FrameProblem& fp, std::span<const double> target_powers,
    std::span<const double> user_gain_sq, const RelaxedAllocation* warm,
    const SolverOptions& opt) {
  Block1Workspace ws = make_workspace(fp, target_powers, user_gain_sq);
  load_warm(ws, warm);

  SolveDiagnostics diag;
  double beta = fp.cfg.penalty_init;
  double kkt = 1.0;
  for (int round = 0; round < opt.penalty_rounds; ++round) {
    int sca_iters = 0;
    double phi_prev = block_phi(ws, beta);
    for (int it = 0; it < opt.sca_max; ++it) {
      refresh_linearization(ws);
      project(ws);
      int sub_iters = 0;
      kkt = subgradient_solve(ws, beta, opt, &sub_iters);
      ++sca_iters;
      if (opt.check_invariants) check_sca_feasibility(ws);
      const double phi = block_phi(ws, beta);
      if (phi_prev - phi <
          fp.cfg.convergence_tol * std::max(1.0, std::abs(phi_prev)))
        break;
      phi_prev = phi;
    }
    diag.sca_iterations.push_back(sca_iters);
    diag.penalty_final = beta;
    if (violation(ws) < 1e-6) break;
    beta *= fp.cfg.penalty_growth;
  }
  diag.kkt_residual = kkt;

  // pour unused RUs into user cells: never hurts QoS, frees power later
  {
    double used = 0.0;
    for (double v : ws.no) used += v;
    const double slack = ws.ru_budget - used;
    if (slack > 1e-9 && ws.k > 0) {
      const double add = slack / (static_cast<double>(ws.k) * ws.slots);
      for (std::size_t i = ws.m; i < ws.no.size(); ++i)
        ws.no[i] = std::min(ws.no[i] + add, double(fp.cfg.num_rbs));
    }
  }

  // among block-optimal points, take the one with minimal user power
  std::vector<double> p_min;
  const double residual = min_user_powers(ws, p_min);
  ws.p = p_min;
  if (residual > 0.0) diag.feasibility_repair_applied = true;

  return {extract(ws), diag};
}

// --- rounding and repair ----------------------------------------------------

namespace {

double user_rate_int(const std::vector<int>& o_row, double p, double gain_sq,
                     const ScenarioConfig& cfg) {
  return channel::throughput(std::span<const int>(o_row), p, gain_sq, cfg);
}

} // namespace

Allocation round_and_repair(const RelaxedAllocation& relaxed,
                            const FrameProblem& fp,
                            std::span<const double> target_powers,
                            std::span<const int> beams,
                            std::span<const double> user_gain_sq,
                            bool* repair_applied) {
  const auto& cfg = fp.cfg;
  const int m = static_cast<int>(relaxed.target_rbs.size());
  const int k = static_cast<int>(relaxed.user_powers.size());
  const int slots = cfg.num_minislots_per_frame;
  const int n_req = cfg.min_rb();
  const long long cap = static_cast<long long>(slots) * cfg.num_rbs;
  bool repaired = false;

  Allocation a;
  a.target_rbs.resize(m);
  a.target_powers.assign(target_powers.begin(), target_powers.end());
  a.user_rbs.assign(k, std::vector<int>(slots, 1));
  a.user_powers = relaxed.user_powers;
  a.user_beam_idx.assign(beams.begin(), beams.end());

  long long used = 0;
  for (int i = 0; i < m; ++i) {
    a.target_rbs[i] = std::clamp(
        static_cast<int>(std::floor(relaxed.target_rbs[i] + 1e-9)), n_req,
        cfg.num_rbs);
    used += a.target_rbs[i];
  }
  for (int u = 0; u < k; ++u)
    for (int i = 0; i < slots; ++i) {
      const double rel = relaxed.user_rbs[u * slots + i];
      a.user_rbs[u][i] =
          std::clamp(static_cast<int>(std::floor(rel + 1e-9)), 1, cfg.num_rbs);
      used += a.user_rbs[u][i];
    }
  long long leftover = cap - used;

  auto qos_gap_of = [&](int u) {
    return fp.users[u].gamma -
           user_rate_int(a.user_rbs[u], a.user_powers[u], user_gain_sq[u],
                         cfg);
  };
  const double t0fac = cfg.throughput_in_bits ? cfg.minislot_duration : 1.0;
  auto slot_rate = [&](int u, int o) {
    const double w = o * cfg.rb_bandwidth;
    const double s = a.user_powers[u] * user_gain_sq[u] / cfg.noise_psd;
    return t0fac * w * std::log2(1.0 + s / w);
  };

  // leftover RUs: QoS-violating users first, largest fractional part first
  struct Cell {
    double frac;
    int user, slot;
  };
  std::vector<Cell> cells;
  cells.reserve(static_cast<std::size_t>(k) * slots);
  for (int u = 0; u < k; ++u)
    for (int i = 0; i < slots; ++i) {
      const double rel = relaxed.user_rbs[u * slots + i];
      cells.push_back({rel - std::floor(rel + 1e-9), u, i});
    }
  std::stable_sort(cells.begin(), cells.end(),
                   [](const Cell& x, const Cell& y) { return x.frac > y.frac; });

  for (int u = 0; u < k && leftover > 0; ++u) {
    double gap = qos_gap_of(u);
    if (gap <= 0.0) continue;
    // bump this user's cells (largest fraction first, cycling) with
    // incremental rate updates until the gap closes
    std::vector<int> order;
    order.reserve(slots);
    for (const auto& c : cells)
      if (c.user == u) order.push_back(c.slot);
    std::size_t idx = 0, stuck = 0;
    while (gap > 0.0 && leftover > 0 && stuck < order.size()) {
      const int slot = order[idx];
      idx = (idx + 1) % order.size();
      if (a.user_rbs[u][slot] >= cfg.num_rbs) {
        ++stuck;
        continue;
      }
      stuck = 0;
      const int o_old = a.user_rbs[u][slot];
      gap -= slot_rate(u, o_old + 1) - slot_rate(u, o_old);
      ++a.user_rbs[u][slot];
      --leftover;
      repaired = true;
    }
  }
  // top up non-violating users to the ceiling of their relaxed value
  for (const auto& c : cells) {
    if (leftover <= 0) break;
    const double rel = relaxed.user_rbs[c.user * slots + c.slot];
    const int ceil_rel = static_cast<int>(std::ceil(rel - 1e-9));
    if (a.user_rbs[c.user][c.slot] < std::min(ceil_rel, cfg.num_rbs)) {
      ++a.user_rbs[c.user][c.slot];
      --leftover;
    }
  }

  // remaining QoS gaps: raise user powers within the budget
  double head = cfg.total_power - a.power_total();
  if (head > 0.0) {
    std::vector<double> need(k, 0.0);
    double need_total = 0.0;
    for (int u = 0; u < k; ++u) {
      if (qos_gap_of(u) <= 0.0 || user_gain_sq[u] <= 0.0) continue;
      double lo = a.user_powers[u], hi = a.user_powers[u] + head;
      const double gamma = fp.users[u].gamma;
      if (user_rate_int(a.user_rbs[u], hi, user_gain_sq[u], cfg) < gamma) {
        need[u] = head;
      } else {
        for (int it = 0; it < 90; ++it) {
          const double mid = 0.5 * (lo + hi);
          if (user_rate_int(a.user_rbs[u], mid, user_gain_sq[u], cfg) >= gamma)
            hi = mid;
          else
            lo = mid;
        }
        need[u] = hi * (1.0 + 1e-12) - a.user_powers[u];
      }
      need_total += need[u];
    }
    if (need_total > 0.0) {
      const double scale = std::min(1.0, head / need_total);
      for (int u = 0; u < k; ++u) a.user_powers[u] += scale * need[u];
      repaired = true;
    }
  }

  if (repair_applied) *repair_applied = repaired;
  a.validate(cfg);
  return a;
}

// --- full BCD ---------------------------------------------------------------

double true_objective(const FrameProblem& fp, std::span<const double> n_rbs,
                      std::span<const double> target_powers) {
  double total = 0.0;
  for (std::size_t i = 0; i < fp.targets.size(); ++i)
    total += estimation::posterior_pcrb_trace(
        fp.targets[i].prior_cov, fp.targets[i].jac,
        fp.targets[i].link_gain_sq, target_powers[i], n_rbs[i], fp.cfg);
  return total;
}

namespace {

struct BcdState {
  RelaxedAllocation x;
  std::vector<double> p_m;
  double objective = kInf;
  double violation = kInf;
};

// residual QoS gap (bits) of a relaxed point at floored RBs
double relaxed_violation(const FrameProblem& fp, const RelaxedAllocation& x,
                         std::span<const double> gains) {
  const auto& cfg = fp.cfg;
  const int slots = cfg.num_minislots_per_frame;
  std::vector<double> o(slots);
  double viol = 0.0;
  for (std::size_t u = 0; u < fp.users.size(); ++u) {
    for (int i = 0; i < slots; ++i)
      o[i] = std::max(1.0, std::floor(x.user_rbs[u * slots + i] + 1e-9));
    const double rate = channel::throughput(std::span<const double>(o),
                                            x.user_powers[u], gains[u], cfg);
    viol += std::max(fp.users[u].gamma - rate, 0.0);
  }
  return viol;
}

} // namespace

std::pair<Allocation, SolveDiagnostics> bcd_solve(const FrameProblem& fp,
                                                  const SolverOptions& opt) {
  const auto& cfg = fp.cfg;
  if (!fp.codebook) throw std::invalid_argument("bcd_solve: missing codebook");
  const int m = static_cast<int>(fp.targets.size());
  const int k = static_cast<int>(fp.users.size());

  std::vector<int> beams(k, 0);
  std::vector<double> gains(k, 0.0);
  for (int u = 0; u < k; ++u) {
    beams[u] = select_beam(fp.users[u].channel, *fp.codebook);
    gains[u] =
        channel::beam_gain_sq(fp.users[u].channel, fp.codebook->beams[beams[u]]);
  }

  BcdState cur;
  cur.p_m.assign(m, cfg.total_power / (m + k));
  SolveDiagnostics diag;

  int outer = 0;
  for (; outer < opt.max_outer; ++outer) {
    auto [x1, d1] = solve_bandwidth_power_block(
        fp, cur.p_m, gains, outer == 0 ? nullptr : &cur.x, opt);
    for (int s : d1.sca_iterations) diag.sca_iterations.push_back(s);
    diag.penalty_final = d1.penalty_final;
    diag.kkt_residual = std::max(diag.kkt_residual, d1.kkt_residual);

    // joint n<->o exchange scored by the true objective with the power
    // block's response included; tau = 0 keeps the block-1 point
    const int slots = cfg.num_minislots_per_frame;
    const double n_req = cfg.min_rb();
    BcdState best;
    const std::vector<double> taus =
        opt.exchange_search ? std::vector<double>{0.0, 0.25, 0.5, 0.75, 1.0}
                            : std::vector<double>{0.0};
    for (double tau : taus) {
      BcdState cand;
      cand.x = x1;
      double freed = 0.0;
      for (int i = 0; i < m; ++i) {
        const double n_new = n_req + (1.0 - tau) * (x1.target_rbs[i] - n_req);
        freed += x1.target_rbs[i] - n_new;
        cand.x.target_rbs[i] = n_new;
      }
      if (freed > 0.0 && k > 0) {
        const double add = freed / (static_cast<double>(k) * slots);
        for (auto& o : cand.x.user_rbs)
          o = std::min(o + add, double(cfg.num_rbs));
      }
      // recompute minimal user powers at the new RB split
      Block1Workspace ws = make_workspace(fp, cur.p_m, gains);
      std::copy(cand.x.target_rbs.begin(), cand.x.target_rbs.end(),
                ws.no.begin());
      std::copy(cand.x.user_rbs.begin(), cand.x.user_rbs.end(),
                ws.no.begin() + m);
      std::vector<double> p_min;
      min_user_powers(ws, p_min);
      cand.x.user_powers = p_min;

      double p_users = std::accumulate(p_min.begin(), p_min.end(), 0.0);
      const double budget = cfg.total_power - p_users;
      if (!(budget > 0.0)) continue;
      std::vector<estimation::ScalarizedPcrb> scal_pw;
      scal_pw.reserve(m);
      for (int i = 0; i < m; ++i)
        scal_pw.push_back(estimation::scalarize_power(
            fp.targets[i].j_prior, fp.targets[i].link_gain_sq,
            cand.x.target_rbs[i], fp.targets[i].jac, cfg));
      cand.p_m = solve_power_block(scal_pw, budget);
      cand.objective = true_objective(fp, cand.x.target_rbs, cand.p_m);
      cand.violation = relaxed_violation(fp, cand.x, gains);

      const bool better =
          cand.violation < best.violation - 1e-9 ||
          (cand.violation < best.violation + 1e-9 &&
           cand.objective < best.objective);
      if (better) best = std::move(cand);
    }
    if (!std::isfinite(best.objective))
      throw InfeasibleError("bcd_solve: no feasible block-2 candidate");

    // accept only non-worsening outer steps (keeps the trace monotone)
    const bool accept =
        best.violation < cur.violation - 1e-9 ||
        (best.violation < cur.violation + 1e-9 &&
         best.objective <=
             cur.objective + 1e-9 * std::max(1.0, std::abs(cur.objective)));
    if (!accept) break;

    const double prev_obj = cur.objective;
    cur = std::move(best);
    diag.objective_trace.push_back(cur.objective);
    if (prev_obj - cur.objective <
        cfg.convergence_tol * std::max(1.0, std::abs(prev_obj))) {
      ++outer;
      break;
    }
  }
  diag.outer_iterations = outer;

  // refresh aux at the accepted point (z_mj = 1/(a_mj + b_mj n^2))
  {
    cur.x.aux.resize(m);
    for (int i = 0; i < m; ++i) {
      const auto s = estimation::scalarize_bandwidth(
          fp.targets[i].j_prior, fp.targets[i].link_gain_sq, cur.p_m[i],
          fp.targets[i].jac, cfg);
      const double n2 = cur.x.target_rbs[i] * cur.x.target_rbs[i];
      for (int j = 0; j < 4; ++j)
        cur.x.aux[i][j] = 1.0 / (s.a[j] + s.b[j] * n2);
    }
  }

  bool repaired = false;
  Allocation a =
      round_and_repair(cur.x, fp, cur.p_m, beams, gains, &repaired);
  diag.feasibility_repair_applied = repaired;
  return {std::move(a), std::move(diag)};
}

} // namespace isac::alloc
