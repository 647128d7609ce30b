// SPDX-License-Identifier: Apache-2.0

#include "isac/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <future>
#include <stdexcept>
#include <thread>

#include "isac/rng.hpp"

namespace isac::harness {

std::string method_name(Method m) {
  switch (m) {
    case Method::proposed: return "proposed";
    case Method::rftep: return "rftep";
    case Method::upper_bound: return "upper_bound";
  }
  return "unknown";
}

Method method_from_name(const std::string& name) {
  if (name == "proposed") return Method::proposed;
  if (name == "rftep") return Method::rftep;
  if (name == "upper_bound") return Method::upper_bound;
  throw std::invalid_argument("unknown method: " + name);
}

FrameState init_state(const ScenarioConfig& cfg, const Scenario& scn,
                      std::uint64_t seed) {
  if (scn.targets.size() != static_cast<std::size_t>(cfg.num_targets) ||
      scn.users.size() != static_cast<std::size_t>(cfg.num_users))
    throw std::invalid_argument("init_state: scenario does not match config");
  FrameState st;
  st.true_targets.reserve(scn.targets.size());
  st.tracks.reserve(scn.targets.size());
  Mat4 prior_cov = Mat4::Zero();
  prior_cov.diagonal() << kInitPosStd * kInitPosStd, kInitPosStd * kInitPosStd,
      kInitVelStd * kInitVelStd, kInitVelStd * kInitVelStd;
  for (std::size_t m = 0; m < scn.targets.size(); ++m) {
    st.true_targets.push_back(scn.targets[m].state);
    EkfTrack tr;
    auto rng = make_rng(seed, stream::ekf_init, m);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Vec4 draw;
    for (int i = 0; i < 4; ++i) draw[i] = gauss(rng);
    tr.estimate =
        scn.targets[m].state + prior_cov.diagonal().cwiseSqrt().asDiagonal() *
                                   draw;
    tr.cov = prior_cov;
    tr.fim_inv = prior_cov;
    Mat4 fim0 = Mat4::Zero();
    fim0.diagonal() = prior_cov.diagonal().cwiseInverse();
    tr.fim = fim0;
    st.tracks.push_back(tr);
    st.dead_reckoned.push_back(tr.estimate);
  }
  st.channels.reserve(scn.users.size());
  for (const auto& u : scn.users) {
    st.channels.push_back(u.channel);
    st.innovation_var.push_back(u.innovation_var);
    st.gammas.push_back(u.throughput_threshold);
  }
  return st;
}

alloc::FrameProblem build_frame_problem(const FrameState& state,
                                        const ScenarioConfig& cfg,
                                        const channel::Codebook& cb) {
  alloc::FrameProblem fp;
  fp.cfg = cfg;
  fp.codebook = &cb;
  const auto model =
      dynamics::make_motion_model(cfg.frame_interval, cfg.process_noise_level);
  fp.targets.reserve(state.tracks.size());
  for (const auto& tr : state.tracks) {
    alloc::TargetPrediction t;
    const Vec4 pred = model.transition * tr.estimate;
    const auto polar = dynamics::to_polar(pred);
    t.jac = dynamics::measurement_jacobian(pred);
    t.prior_cov = model.process_cov +
                  model.transition * tr.fim_inv * model.transition.transpose();
    t.prior_cov = 0.5 * (t.prior_cov + t.prior_cov.transpose());
    t.j_prior = estimation::spd_inverse_strict(t.prior_cov);
    // sensing beam points at the predicted AoD, so the predicted link gain
    // collapses to the reflection coefficient
    t.link_gain_sq = channel::reflection_coeff_sq(polar.distance, cfg);
    t.aod = polar.angle;
    fp.targets.push_back(std::move(t));
  }
  fp.users.reserve(state.channels.size());
  for (std::size_t k = 0; k < state.channels.size(); ++k)
    fp.users.push_back({state.channels[k], state.gammas[k]});
  return fp;
}

Allocation rftep_allocation(const alloc::FrameProblem& fp,
                            std::mt19937_64& rng) {
  const auto& cfg = fp.cfg;
  const int m = static_cast<int>(fp.targets.size());
  const int k = static_cast<int>(fp.users.size());
  const int slots = cfg.num_minislots_per_frame;
  const int n_req = cfg.min_rb();

  Allocation a;
  a.target_rbs.resize(m);
  a.user_rbs.assign(k, std::vector<int>(slots, 1));
  std::uniform_int_distribution<int> un(n_req, cfg.num_rbs);
  std::uniform_int_distribution<int> uo(1, cfg.num_rbs);
  long long total = 0;
  for (auto& n : a.target_rbs) total += (n = un(rng));
  for (auto& row : a.user_rbs)
    for (auto& o : row) total += (o = uo(rng));

  // scale the excess above the lower bounds into the RU budget
  const long long cap = static_cast<long long>(slots) * cfg.num_rbs;
  const long long lb_sum =
      static_cast<long long>(m) * n_req + static_cast<long long>(k) * slots;
  if (total > cap) {
    const double scale = static_cast<double>(cap - lb_sum) /
                         static_cast<double>(total - lb_sum);
    for (auto& n : a.target_rbs)
      n = n_req + static_cast<int>(std::floor(scale * (n - n_req)));
    for (auto& row : a.user_rbs)
      for (auto& o : row)
        o = 1 + static_cast<int>(std::floor(scale * (o - 1)));
  }

  const double p_each = cfg.total_power / (m + k);
  a.target_powers.assign(m, p_each);
  a.user_powers.assign(k, p_each);
  a.user_beam_idx.resize(k);
  for (int u = 0; u < k; ++u)
    a.user_beam_idx[u] = alloc::select_beam(fp.users[u].channel, *fp.codebook);
  a.validate(cfg);
  return a;
}

Allocation upper_bound_allocation(const alloc::FrameProblem& fp) {
  const auto& cfg = fp.cfg;
  const int m = static_cast<int>(fp.targets.size());
  const int k = static_cast<int>(fp.users.size());
  Allocation a;
  a.budget_exempt = true;
  a.target_rbs.assign(m, cfg.num_rbs);
  a.target_powers.assign(m, cfg.total_power);
  a.user_rbs.assign(k, std::vector<int>(cfg.num_minislots_per_frame,
                                        cfg.num_rbs));
  a.user_powers.assign(k, cfg.total_power);
  a.user_beam_idx.resize(k);
  for (int u = 0; u < k; ++u)
    a.user_beam_idx[u] = alloc::select_beam(fp.users[u].channel, *fp.codebook);
  a.validate(cfg);
  return a;
}

Allocation allocate_frame(const alloc::FrameProblem& fp, Method method,
                          std::uint64_t seed, int frame,
                          alloc::SolveDiagnostics* diag) {
  switch (method) {
    case Method::proposed: {
      auto [a, d] = alloc::bcd_solve(fp, alloc::solver_options_from(fp.cfg));
      if (diag) *diag = std::move(d);
      return a;
    }
    case Method::rftep: {
      auto rng = make_rng(seed, stream::rftep, frame);
      return rftep_allocation(fp, rng);
    }
    case Method::upper_bound:
      return upper_bound_allocation(fp);
  }
  throw std::logic_error("unreachable");
}

namespace {

Mat4 clamp_psd(const Mat4& a) {
  Eigen::SelfAdjointEigenSolver<Mat4> es(0.5 * (a + a.transpose()));
  const Vec4 lam = es.eigenvalues().cwiseMax(0.0);
  Mat4 r = es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
  return 0.5 * (r + r.transpose());
}

// scalar Kalman update for one measurement component (range or bearing);
// equivalent to the joint update when the noise is diagonal
void scalar_update(Vec4& est, Mat4& cov, const Eigen::RowVector4d& h,
                   double innovation, double noise_var) {
  const double s = noise_var + h * cov * h.transpose();
  const Vec4 gain = cov * h.transpose() / s;
  est += gain * innovation;
  Mat4 m = (Mat4::Identity() - gain * h) * cov;
  cov = clamp_psd(m);
}

} // namespace

FrameMetrics run_frame(FrameState& state, const alloc::FrameProblem& fp,
                       const Allocation& alloc_in, const ScenarioConfig& cfg,
                       std::uint64_t seed,
                       const alloc::SolveDiagnostics* diag) {
  const int m = static_cast<int>(state.true_targets.size());
  const int k = static_cast<int>(state.channels.size());
  const auto model =
      dynamics::make_motion_model(cfg.frame_interval, cfg.process_noise_level);
  const int frame = state.frame;

  alloc_in.validate(cfg);
  FrameMetrics fm;
  fm.pcrb_trace.resize(m);
  fm.position_error.resize(m);
  fm.dead_reckon_error.resize(m);
  fm.throughput.resize(k);
  fm.qos_feasible.resize(k);
  if (diag) {
    fm.solver_iterations = diag->outer_iterations;
    fm.objective_value = diag->objective_trace.empty()
                             ? 0.0
                             : diag->objective_trace.back();
  }
  if (!diag || diag->objective_trace.empty()) {
    std::vector<double> n_d(alloc_in.target_rbs.begin(),
                            alloc_in.target_rbs.end());
    fm.objective_value =
        alloc::true_objective(fp, n_d, alloc_in.target_powers);
  }

  for (int i = 0; i < m; ++i) {
    const double p = alloc_in.target_powers[i];
    const double n = alloc_in.target_rbs[i];
    // echo from the true state, beam pointed at the predicted AoD
    const CVec beam = channel::steering_vector(
        fp.targets[i].aod, cfg.num_tx_antennas, cfg.wavelength());
    const auto true_polar = dynamics::to_polar(state.true_targets[i]);
    const auto link =
        channel::sensing_gain(true_polar.distance, true_polar.angle, beam, cfg);
    const Mat2 cov_true = dynamics::measurement_cov(
        std::max(p * link.gain_sq, 1e-130), n, cfg);
    auto rng_meas = make_rng(seed, stream::measurement, frame, i);
    const auto z = dynamics::synthesize_measurement(state.true_targets[i],
                                                    cov_true, rng_meas);

    // The tracker weighs each plot by its realized accuracy: the receiver
    // observes the echo SNR, so the update covariance follows the actual
    // link gain (a mispointed beam yields honestly noisy bearings). The
    // bearing variance also carries the filter's own pointing uncertainty,
    // which covers the linearization error during acquisition and vanishes
    // once locked.
    const double gain_hat = p * fp.targets[i].link_gain_sq;
    auto& tr = state.tracks[i];
    const Mat4 cov_pred = model.transition * tr.cov *
                              model.transition.transpose() +
                          model.process_cov;
    auto cov_at = [&](const Vec4& pred) {
      Mat2 s = cov_true;
      const Mat24 jac_pred = dynamics::measurement_jacobian(pred);
      const double bearing_var =
          jac_pred.row(1) * cov_pred * jac_pred.row(1).transpose();
      const double range = pred.head<2>().norm();
      // second-order linearization residual of the range map at the
      // current cross-range uncertainty: |delta_c|^2 / (2 d)
      const double range_bias = 0.5 * range * bearing_var;
      s(0, 0) += range_bias * range_bias;
      s(1, 1) += bearing_var;
      return s;
    };

    // per-component innovation gates: a mispointed beam can return an echo
    // whose bearing error is far beyond the matched-beam statistics, while
    // the range stays sharp; absorb what is consistent, coast on the rest
    const Vec4 pred = model.transition * tr.estimate;
    const auto pred_polar = dynamics::to_polar(pred);
    const Mat24 jac_pred = dynamics::measurement_jacobian(pred);
    const Mat2 sigma_hat = cov_at(pred);
    const Mat2 s_innov =
        sigma_hat + jac_pred * cov_pred * jac_pred.transpose();
    const double innov_d = z.z[0] - pred_polar.distance;
    const double innov_phi =
        dynamics::wrap_angle(z.z[1] - pred_polar.angle);
    const bool ok_d = std::abs(innov_d) <= 4.0 * std::sqrt(s_innov(0, 0));
    const bool ok_phi = std::abs(innov_phi) <= 4.0 * std::sqrt(s_innov(1, 1));
    if (ok_d && ok_phi) {
      const auto upd =
          estimation::ekf_step(tr.estimate, tr.cov, model, z, cov_at);
      tr.estimate = upd.estimate;
      tr.cov = clamp_psd(upd.cov);
    } else {
      tr.estimate = pred;
      tr.cov = clamp_psd(cov_pred);
      if (ok_d)
        scalar_update(tr.estimate, tr.cov, jac_pred.row(0), innov_d,
                      sigma_hat(0, 0));
      else if (ok_phi)
        scalar_update(tr.estimate, tr.cov, jac_pred.row(1), innov_phi,
                      sigma_hat(1, 1));
    }

    // posterior information at the predicted state and allocated resources
    const Mat4 post_cov = clamp_psd(estimation::posterior_crb(
        fp.targets[i].prior_cov, fp.targets[i].jac,
        fp.targets[i].link_gain_sq, p, n, cfg));
    tr.fim_inv = post_cov;
    tr.fim = fp.targets[i].j_prior +
             estimation::data_fim(
                 fp.targets[i].jac,
                 dynamics::measurement_cov(std::max(gain_hat, 1e-130), n,
                                           cfg));
    fm.pcrb_trace[i] = post_cov.trace();

    fm.position_error[i] =
        (tr.estimate.head<2>() - state.true_targets[i].head<2>()).norm();
    state.dead_reckoned[i] = model.transition * state.dead_reckoned[i];
    fm.dead_reckon_error[i] =
        (state.dead_reckoned[i].head<2>() - state.true_targets[i].head<2>())
            .norm();
  }

  for (int u = 0; u < k; ++u) {
    const auto& beam = fp.codebook->beams[alloc_in.user_beam_idx[u]];
    const double gain = channel::beam_gain_sq(state.channels[u], beam);
    fm.throughput[u] = channel::throughput(
        std::span<const int>(alloc_in.user_rbs[u]), alloc_in.user_powers[u],
        gain, cfg);
    fm.qos_feasible[u] = fm.throughput[u] >= state.gammas[u] * (1.0 - 1e-12);
  }

  // world advance: true motion and channel aging
  for (int i = 0; i < m; ++i) {
    auto rng_proc = make_rng(seed, stream::process, frame, i);
    state.true_targets[i] =
        dynamics::propagate_state(state.true_targets[i], model, &rng_proc);
  }
  for (int u = 0; u < k; ++u) {
    auto rng_chan = make_rng(seed, stream::channel, frame, u);
    state.channels[u] = channel::evolve_comm_channel(
        state.channels[u], cfg.time_correlation, state.innovation_var[u],
        rng_chan);
  }
  ++state.frame;
  return fm;
}

EpisodeResult run_episode(const ScenarioConfig& cfg, Method method,
                          std::uint64_t seed) {
  validate_config(cfg);
  const Scenario scn = generate_scenario(cfg, seed);
  FrameState st = init_state(cfg, scn, seed);
  const auto cb = channel::build_codebook(cfg.num_tx_antennas,
                                          cfg.codebook_size(),
                                          cfg.wavelength());
  EpisodeResult ep;
  ep.method = method;
  ep.seed = seed;
  for (int u = 0; u < cfg.num_frames; ++u) {
    const auto fp = build_frame_problem(st, cfg, cb);
    alloc::SolveDiagnostics diag;
    const Allocation a = allocate_frame(fp, method, seed, u, &diag);
    ep.true_traj.push_back(st.true_targets);
    ep.frames.push_back(run_frame(st, fp, a, cfg, seed, &diag));
    std::vector<Vec4> est;
    est.reserve(st.tracks.size());
    for (const auto& tr : st.tracks) est.push_back(tr.estimate);
    ep.est_traj.push_back(std::move(est));
    ep.dr_traj.push_back(st.dead_reckoned);
    ep.allocations.push_back(a);
  }
  return ep;
}

namespace {

int thread_count(int n_trials) {
  if (const char* env = std::getenv("ISAC_THREADS")) {
    const int n = std::atoi(env);
    if (n >= 1) return std::min(n, n_trials);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return std::max(1, std::min<int>(hw ? hw : 1, n_trials));
}

} // namespace

MonteCarloResult monte_carlo(const ScenarioConfig& cfg,
                             std::span<const Method> methods, int n_trials,
                             bool keep_episodes) {
  if (n_trials < 1)
    throw std::invalid_argument("monte_carlo: n_trials must be >= 1");
  validate_config(cfg);
  const int n_methods = static_cast<int>(methods.size());
  const int total = n_trials * n_methods;

  std::vector<EpisodeResult> episodes(total);
  const int workers = thread_count(n_trials);
  std::vector<std::future<void>> futs;
  futs.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    futs.push_back(std::async(std::launch::async, [&, w]() {
      for (int t = w; t < n_trials; t += workers) {
        for (int mi = 0; mi < n_methods; ++mi)
          episodes[t * n_methods + mi] =
              run_episode(cfg, methods[mi], cfg.rng_seed + t);
      }
    }));
  }
  for (auto& f : futs) f.get();

  MonteCarloResult res;
  res.aggregates.resize(n_methods);
  const int frames = cfg.num_frames;
  for (int mi = 0; mi < n_methods; ++mi) {
    auto& agg = res.aggregates[mi];
    agg.method = methods[mi];
    agg.mean_pcrb.assign(frames, 0.0);
    agg.qos_ratio.assign(frames, 0.0);
    agg.position_rmse.assign(frames, 0.0);
    agg.dead_reckon_rmse.assign(frames, 0.0);
    agg.mean_throughput.assign(frames, 0.0);
    long long qos_total = 0, qos_count = 0;
    for (int t = 0; t < n_trials; ++t) { // ordered reduction
      const auto& ep = episodes[t * n_methods + mi];
      for (int u = 0; u < frames; ++u) {
        const auto& fm = ep.frames[u];
        for (double v : fm.pcrb_trace) agg.mean_pcrb[u] += v;
        for (double v : fm.position_error)
          agg.position_rmse[u] += v * v;
        for (double v : fm.dead_reckon_error)
          agg.dead_reckon_rmse[u] += v * v;
        for (double v : fm.throughput) agg.mean_throughput[u] += v;
        for (bool b : fm.qos_feasible) {
          agg.qos_ratio[u] += b ? 1.0 : 0.0;
          qos_total += b ? 1 : 0;
          ++qos_count;
        }
      }
    }
    const double nm = static_cast<double>(n_trials) * cfg.num_targets;
    const double nk = static_cast<double>(n_trials) * cfg.num_users;
    double pcrb_sum = 0.0;
    for (int u = 0; u < frames; ++u) {
      agg.mean_pcrb[u] /= nm;
      agg.position_rmse[u] = std::sqrt(agg.position_rmse[u] / nm);
      agg.dead_reckon_rmse[u] = std::sqrt(agg.dead_reckon_rmse[u] / nm);
      agg.mean_throughput[u] /= nk;
      agg.qos_ratio[u] /= nk;
      pcrb_sum += agg.mean_pcrb[u];
    }
    agg.mean_pcrb_total = pcrb_sum / frames;
    agg.qos_ratio_total =
        qos_count > 0 ? static_cast<double>(qos_total) / qos_count : 0.0;
  }
  if (keep_episodes) res.episodes = std::move(episodes);
  return res;
}

std::vector<SweepPoint> tradeoff_sweep(const ScenarioConfig& cfg,
                                       std::span<const double> gammas,
                                       int n_trials) {
  if (gammas.empty())
    throw std::invalid_argument("tradeoff_sweep: empty gamma list");
  for (std::size_t i = 1; i < gammas.size(); ++i)
    if (gammas[i] < gammas[i - 1])
      throw std::invalid_argument("tradeoff_sweep: gammas must be ascending");
  std::vector<SweepPoint> curve;
  curve.reserve(gammas.size());
  const Method proposed[] = {Method::proposed};
  for (double g : gammas) {
    ScenarioConfig c = cfg;
    c.throughput_threshold = g;
    const auto mc = monte_carlo(c, proposed, n_trials, false);
    curve.push_back(
        {g, mc.aggregates[0].mean_pcrb_total, mc.aggregates[0].qos_ratio_total});
  }
  return curve;
}

} // namespace isac::harness
