#include "rescon/sim.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <Eigen/Eigenvalues>

#include "rescon/errors.hpp"
#include "rescon/rng.hpp"
#include "rescon/stats.hpp"

namespace rescon {

namespace {

constexpr double kTimeEps = 1e-9;

// Symmetric PSD factor F with F F' = cov, via eigendecomposition so that
// positive semidefinite (not just definite) covariances are accepted.
Eigen::MatrixXd psd_factor(const Eigen::MatrixXd& cov) {
  if (cov.rows() != cov.cols()) {
    throw ConfigError("noise covariance must be square");
  }
  if ((cov - cov.transpose()).norm() > 1e-9 * (1.0 + cov.norm())) {
    throw ConfigError("noise covariance must be symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  if (es.info() != Eigen::Success) {
    throw ConfigError("noise covariance eigendecomposition failed");
  }
  Eigen::VectorXd lam = es.eigenvalues();
  const double scale = std::max(1.0, cov.norm());
  for (Eigen::Index k = 0; k < lam.size(); ++k) {
    if (lam(k) < -1e-10 * scale) {
      throw ConfigError("noise covariance must be positive semidefinite");
    }
    lam(k) = std::max(lam(k), 0.0);
  }
  return es.eigenvectors() * lam.cwiseSqrt().asDiagonal();
}

double clamp_abs(double v, double cap) { return std::clamp(v, -cap, cap); }

}  // namespace

std::vector<Eigen::VectorXd> Scenario::default_initial_states(int n_agents,
                                                              int n_x) {
  std::vector<Eigen::VectorXd> out;
  out.reserve(n_agents);
  for (int i = 0; i < n_agents; ++i) {
    Eigen::VectorXd x(n_x);
    for (int k = 0; k < n_x; ++k) {
      x(k) = 0.5 * (i + 1) * (k % 2 == 0 ? 1.0 : -1.0);
    }
    out.push_back(x);
  }
  return out;
}

void Scenario::validate() const {
  if (!(dt > 0.0)) throw ConfigError("dt must be positive");
  if (!(t_end > 0.0)) throw ConfigError("t_end must be positive");
  if (t_end + kTimeEps < dt) throw ConfigError("t_end shorter than one step");
  if (!(divergence_cap > 0.0)) throw ConfigError("divergence cap must be positive");
  const int n_x = dynamics.n_x();
  if (dynamics.A.rows() != dynamics.A.cols() || dynamics.B.rows() != n_x ||
      n_x < 1 || dynamics.n_u() < 1) {
    throw ConfigError("dynamics matrices are malformed");
  }
  if (!x0.empty()) {
    if (static_cast<int>(x0.size()) != graph.size()) {
      throw ConfigError("x0 must list one state per agent");
    }
    for (const auto& xi : x0) {
      if (xi.size() != n_x) throw ConfigError("x0 entry has wrong dimension");
    }
  }
  if (explicit_gains) {
    if (explicit_gains->K.rows() != dynamics.n_u() ||
        explicit_gains->K.cols() != n_x || !(explicit_gains->c > 0.0)) {
      throw ConfigError("explicit gains are malformed");
    }
  } else {
    if (Q.size() > 0 && (Q.rows() != n_x || Q.cols() != n_x)) {
      throw ConfigError("Q has wrong shape");
    }
    if (R.size() > 0 &&
        (R.rows() != dynamics.n_u() || R.cols() != dynamics.n_u())) {
      throw ConfigError("R has wrong shape");
    }
  }
  detector_cfg.validate();
  trust_cfg.validate();
  for (const AttackSpec& spec : attacks) {
    validate_attack_spec(spec, graph, n_x, dynamics.n_u());
  }
  if (thresholds) {
    const size_t n = static_cast<size_t>(graph.size());
    if (thresholds->gamma_imp.size() != n ||
        thresholds->gamma_nonimp.size() != n || thresholds->delta.size() != n) {
      throw ConfigError("threshold lists must have one entry per agent");
    }
  }
}

Eigen::VectorXd Trace::agent_state(int step, int i) const {
  return states.row(step).segment(i * n_x, n_x);
}

Eigen::VectorXd Trace::agent_input(int step, int i) const {
  return u_c.row(step).segment(i * n_u, n_u);
}

Eigen::VectorXd Trace::agent_eta(int step, int i) const {
  return eta_used.row(step).segment(i * n_x, n_x);
}

Trace run_scenario(const Scenario& s) {
  s.validate();
  const DiGraph& g = s.graph;
  const int n = g.size();
  const int n_x = s.dynamics.n_x();
  const int n_u = s.dynamics.n_u();

  const Eigen::MatrixXd Q =
      s.Q.size() > 0 ? s.Q : Eigen::MatrixXd::Identity(n_x, n_x);
  const Eigen::MatrixXd R =
      s.R.size() > 0 ? s.R : Eigen::MatrixXd::Identity(n_u, n_u);
  const GainDesign gains =
      s.explicit_gains ? *s.explicit_gains
                       : design_gains(s.dynamics, g, Q, R, s.safety_factor);

  const long N = static_cast<long>(std::floor(s.t_end / s.dt + 1e-6));
  const int steps = static_cast<int>(N) + 1;

  Trace tr;
  tr.scenario_name = s.name;
  tr.seed = s.seed;
  tr.n_agents = n;
  tr.n_x = n_x;
  tr.n_u = n_u;
  tr.dt = s.dt;
  tr.t_end = s.t_end;
  tr.divergence_cap = s.divergence_cap;
  tr.mitigation_enabled = s.mitigation_enabled;
  tr.assumption_violated = classify_A_spectrum(s.dynamics).has_unstable;
  for (const AttackSpec& spec : s.attacks) {
    if (std::isnan(tr.attack_t_start) || spec.t_start < tr.attack_t_start) {
      tr.attack_t_start = spec.t_start;
    }
  }
  for (int i = 0; i < n; ++i) {
    for (const int j : g.in_neighbors(i)) tr.omega_edges.emplace_back(i, j);
  }
  const int n_edges = static_cast<int>(tr.omega_edges.size());

  tr.t.resize(steps);
  tr.states.setZero(steps, n * n_x);
  tr.eta_used.setZero(steps, n * n_x);
  tr.u_c.setZero(steps, n * n_u);
  tr.f_overall.setZero(steps, n * n_u);
  tr.tau.setZero(steps, n);
  tr.phi.setZero(steps, n);
  tr.d_imp_avg.setZero(steps, n);
  tr.d_nonimp_avg.setZero(steps, n);
  tr.h_imp.setZero(steps, n);
  tr.h_nonimp.setZero(steps, n);
  tr.xi.setOnes(steps, n);
  tr.omega.setOnes(steps, n_edges);
  tr.consensus_curve.setZero(steps);
  tr.divergence_time.assign(n, std::numeric_limits<double>::quiet_NaN());

  // Per-agent detector and trust machinery. The nominal distribution is the
  // attack-free law of the noisy tracking error at consensus.
  std::vector<DetectorConfig> dcfg(n, s.detector_cfg);
  std::vector<TrustConfig> tcfg(n, s.trust_cfg);
  std::vector<DetectorState> det;
  std::vector<TrustState> trust_state;
  det.reserve(n);
  for (int i = 0; i < n; ++i) {
    dcfg[i].nominal.mu = Eigen::VectorXd::Zero(n_x);
    dcfg[i].nominal.Sigma =
        aggregate_noise_covariance(g, s.noise, i, n_x) +
        kCovarianceFloor * Eigen::MatrixXd::Identity(n_x, n_x);
    if (s.thresholds) {
      dcfg[i].gamma_imp = s.thresholds->gamma_imp[i];
      dcfg[i].gamma_nonimp = s.thresholds->gamma_nonimp[i];
      tcfg[i].delta = s.thresholds->delta[i];
    }
    dcfg[i].validate();
    tcfg[i].validate();
    det.emplace_back(dcfg[i], n_x);
    trust_state.push_back(TrustState::initial(g, i));
  }

  // Trust windows: received stream per in-edge plus the normalized
  // neighborhood aggregate. Maintained only when mitigation runs.
  std::vector<std::map<int, RollingVectorWindow>> recv_win(n);
  std::vector<std::optional<RollingVectorWindow>> agg_win(n);
  if (s.mitigation_enabled) {
    for (int i = 0; i < n; ++i) {
      const auto nbrs = g.in_neighbors(i);
      for (const int j : nbrs) {
        recv_win[i].emplace(j, RollingVectorWindow(tcfg[i].trust_window, n_x));
      }
      if (!nbrs.empty()) {
        agg_win[i].emplace(tcfg[i].trust_window, n_x);
      }
    }
  }

  // Channel noise: precomputed per-edge PSD factors, drawn in a fixed
  // order (agent ascending, in-neighbor ascending) for determinism.
  const bool noisy = s.noise.any();
  std::vector<std::vector<std::pair<int, Eigen::MatrixXd>>> noise_factor(n);
  if (noisy) {
    for (int i = 0; i < n; ++i) {
      for (const int j : g.in_neighbors(i)) {
        const Eigen::MatrixXd* cov = s.noise.covariance(i, j);
        if (cov != nullptr) noise_factor[i].emplace_back(j, psd_factor(*cov));
      }
    }
  }
  GaussianSampler rng(mix_seeds(s.seed, s.noise.rng_seed));

  std::vector<Eigen::VectorXd> x =
      s.x0.empty() ? Scenario::default_initial_states(n, n_x) : s.x0;
  std::vector<char> diverged(n, 0);

  Eigen::VectorXd z(n_x);
  std::vector<Eigen::VectorXd> x_c(n), eta_raw(n), eta_used(n), u_applied(n);
  std::vector<double> tau_now(n), phi_now(n), xi_all(n, 1.0);

  for (long k = 0; k <= N; ++k) {
    const double t = static_cast<double>(k) * s.dt;
    const bool warm = t + kTimeEps >= s.detector_cfg.warmup_time;

    // 1. Channel noise samples for this step.
    std::vector<std::map<int, Eigen::VectorXd>> w(n);
    if (noisy) {
      for (int i = 0; i < n; ++i) {
        for (const auto& [j, F] : noise_factor[i]) {
          rng.fill(z);
          w[i].emplace(j, F * z);
        }
      }
    }

    // 2. Attack corruption: sensor attacks shift the broadcast state, link
    // attacks shift a single edge, actuator attacks add to the input.
    for (int i = 0; i < n; ++i) x_c[i] = x[i];
    std::vector<std::map<int, Eigen::VectorXd>> link_d(n);
    std::vector<Eigen::VectorXd> act(n, Eigen::VectorXd::Zero(n_u));
    for (const AttackSpec& spec : s.attacks) {
      const Eigen::VectorXd sig = attack_signal(spec, t);
      switch (spec.channel) {
        case AttackChannel::actuator:
          act[spec.target] += sig;
          break;
        case AttackChannel::sensor:
          x_c[spec.target] += sig;
          break;
        case AttackChannel::link: {
          auto [it, inserted] = link_d[spec.target].emplace(spec.link_from, sig);
          if (!inserted) it->second += sig;
          break;
        }
      }
    }

    // 3-4. Per-agent measurement, detection, trust.
    for (int i = 0; i < n; ++i) {
      const std::vector<Eigen::VectorXd>* seen = &x_c;
      std::vector<Eigen::VectorXd> seen_local;
      if (!link_d[i].empty()) {
        seen_local = x_c;
        for (const auto& [j, d] : link_d[i]) seen_local[j] += d;
        seen = &seen_local;
      }
      const std::map<int, Eigen::VectorXd>* wi = noisy ? &w[i] : nullptr;

      const auto [tau_i, phi_i] = error_sequences(g, i, *seen, x_c[i], wi);
      tau_now[i] = tau_i;
      phi_now[i] = phi_i;
      eta_raw[i] = local_tracking_error(g, *seen, i, wi);

      // Detectors consume the raw fixed-weight quantities regardless of
      // mitigation, so a cut edge cannot silence the evidence against it.
      const bool evaluate = warm && det[i].tau_win.full();
      if (evaluate) {
        imp_detector_step(det[i], dcfg[i], tau_i, phi_i);
        nonimp_detector_step(det[i], dcfg[i], eta_raw[i]);
        confidence_imp_step(trust_state[i], tcfg[i], det[i].d_imp_avg, s.dt);
        confidence_nonimp_step(trust_state[i], tcfg[i], det[i].d_nonimp_avg,
                               s.dt);
      } else {
        observe_imp(det[i], tau_i, phi_i);
        observe_nonimp(det[i], eta_raw[i]);
      }

      if (s.mitigation_enabled && agg_win[i]) {
        Eigen::VectorXd agg = Eigen::VectorXd::Zero(n_x);
        for (auto& [j, win] : recv_win[i]) {
          Eigen::VectorXd recv = (*seen)[j];
          if (wi != nullptr) {
            const auto nit = wi->find(j);
            if (nit != wi->end()) recv += nit->second;
          }
          win.push(recv);
          agg += recv;
        }
        agg_win[i]->push(agg / static_cast<double>(recv_win[i].size()));
        if (warm && agg_win[i]->full()) {
          const GaussianParams agg_fit = agg_win[i]->gaussian(kCovarianceFloor);
          for (auto& [j, win] : recv_win[i]) {
            const double d = std::max(
                0.0, gaussian_kl(win.gaussian(kCovarianceFloor), agg_fit));
            raw_trust_step(trust_state[i], tcfg[i], j, d, s.dt);
          }
        }
      }
    }

    // 5. Control from this step's beliefs, then record and integrate.
    for (int i = 0; i < n; ++i) xi_all[i] = self_belief(trust_state[i]);
    for (int i = 0; i < n; ++i) {
      const std::vector<Eigen::VectorXd>* seen = &x_c;
      std::vector<Eigen::VectorXd> seen_local;
      if (!link_d[i].empty()) {
        seen_local = x_c;
        for (const auto& [j, d] : link_d[i]) seen_local[j] += d;
        seen = &seen_local;
      }
      if (s.mitigation_enabled) {
        eta_used[i] = resilient_tracking_error(g, i, *seen,
                                               trust(trust_state[i]), xi_all,
                                               noisy ? &w[i] : nullptr);
      } else {
        eta_used[i] = eta_raw[i];
      }
      u_applied[i] = nominal_control(gains, eta_used[i]) + act[i];
    }
    const std::vector<Eigen::VectorXd> f =
        compose_overall_attack(s.attacks, g, gains, s.dynamics, t);

    tr.t(k) = t;
    for (int i = 0; i < n; ++i) {
      if (!diverged[i] && x[i].cwiseAbs().maxCoeff() > s.divergence_cap) {
        diverged[i] = 1;
        tr.divergence_time[i] = t;
      }
      for (int c = 0; c < n_x; ++c) {
        tr.states(k, i * n_x + c) = clamp_abs(x[i](c), s.divergence_cap);
        tr.eta_used(k, i * n_x + c) = eta_used[i](c);
      }
      for (int c = 0; c < n_u; ++c) {
        tr.u_c(k, i * n_u + c) = u_applied[i](c);
        tr.f_overall(k, i * n_u + c) = f[i](c);
      }
      tr.tau(k, i) = tau_now[i];
      tr.phi(k, i) = phi_now[i];
      tr.d_imp_avg(k, i) = det[i].d_imp_avg;
      tr.d_nonimp_avg(k, i) = det[i].d_nonimp_avg;
      tr.h_imp(k, i) = det[i].h_imp == Hypothesis::h1 ? 1 : 0;
      tr.h_nonimp(k, i) = det[i].h_nonimp == Hypothesis::h1 ? 1 : 0;
      tr.xi(k, i) = xi_all[i];
    }
    for (int e = 0; e < n_edges; ++e) {
      const auto [head, tail] = tr.omega_edges[e];
      tr.omega(k, e) = trust_state[head].omega.at(tail);
    }
    double worst = 0.0;
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        worst = std::max(
            worst, (tr.states.row(k).segment(i * n_x, n_x) -
                    tr.states.row(k).segment(j * n_x, n_x)).norm());
      }
    }
    tr.consensus_curve(k) = worst;

    if (k < N) {
      for (int i = 0; i < n; ++i) {
        x[i] = integrate_step(s.dynamics, x[i], u_applied[i], s.dt);
      }
    }
  }

  tr.diverged =
      std::any_of(diverged.begin(), diverged.end(), [](char c) { return c; });
  return tr;
}

ConsensusMetrics consensus_metrics(const Trace& trace,
                                   const std::vector<int>& subset,
                                   double tail_fraction) {
  if (subset.empty()) throw EmptySubset("consensus metrics need agents");
  if (!(tail_fraction > 0.0) || tail_fraction > 1.0) {
    throw ConfigError("tail fraction must lie in (0, 1]");
  }
  for (const int i : subset) {
    if (i < 0 || i >= trace.n_agents) {
      throw ConfigError("consensus subset member out of range");
    }
  }
  const int steps = trace.steps();
  const int tail =
      std::max(1, static_cast<int>(std::floor(steps * tail_fraction)));
  const int start = steps - tail;

  ConsensusMetrics m;
  m.deviation_from_subset_mean.assign(trace.n_agents, 0.0);
  for (const int i : subset) {
    if (!std::isnan(trace.divergence_time[i])) m.subset_diverged = true;
  }

  double sum_peak = 0.0;
  for (int k = start; k < steps; ++k) {
    double peak = 0.0;
    for (size_t a = 0; a < subset.size(); ++a) {
      for (size_t b = a + 1; b < subset.size(); ++b) {
        peak = std::max(peak, (trace.agent_state(k, subset[a]) -
                               trace.agent_state(k, subset[b])).norm());
      }
    }
    m.max_pairwise = std::max(m.max_pairwise, peak);
    sum_peak += peak;

    Eigen::VectorXd mean = Eigen::VectorXd::Zero(trace.n_x);
    for (const int i : subset) mean += trace.agent_state(k, i);
    mean /= static_cast<double>(subset.size());
    for (int i = 0; i < trace.n_agents; ++i) {
      m.deviation_from_subset_mean[i] +=
          (trace.agent_state(k, i) - mean).norm();
    }
  }
  m.tail_average = sum_peak / tail;
  for (double& d : m.deviation_from_subset_mean) d /= tail;
  if (m.subset_diverged) {
    m.max_pairwise = std::numeric_limits<double>::infinity();
    m.tail_average = std::numeric_limits<double>::infinity();
  }
  return m;
}

std::optional<double> detection_latency(const Trace& trace, int agent,
                                        DetectorKind kind) {
  if (std::isnan(trace.attack_t_start)) {
    throw ConfigError("detection latency needs an attack in the scenario");
  }
  if (agent < 0 || agent >= trace.n_agents) {
    throw ConfigError("agent index out of range");
  }
  const Eigen::MatrixXi& h =
      kind == DetectorKind::imp ? trace.h_imp : trace.h_nonimp;
  for (int k = 0; k < trace.steps(); ++k) {
    if (trace.t(k) + kTimeEps < trace.attack_t_start) continue;
    if (h(k, agent) == 1) return trace.t(k) - trace.attack_t_start;
  }
  return std::nullopt;
}

ThresholdSet calibrate_thresholds(const Scenario& base, int runs,
                                  double factor) {
  if (!base.attacks.empty()) {
    throw RefusesAttackScenario("calibration requires an attack-free scenario");
  }
  if (runs < 1) throw ConfigError("calibration needs at least one run");
  if (!(factor > 0.0)) throw ConfigError("calibration factor must be positive");

  const int n = base.graph.size();
  std::vector<double> max_imp(n, 0.0), max_nonimp(n, 0.0);
  for (int m = 0; m < runs; ++m) {
    Scenario s = base;
    s.seed = base.seed + static_cast<std::uint64_t>(m);
    s.mitigation_enabled = false;
    s.thresholds.reset();
    const Trace tr = run_scenario(s);
    for (int k = 0; k < tr.steps(); ++k) {
      if (tr.t(k) + kTimeEps < base.detector_cfg.warmup_time) continue;
      for (int i = 0; i < n; ++i) {
        max_imp[i] = std::max(max_imp[i], tr.d_imp_avg(k, i));
        max_nonimp[i] = std::max(max_nonimp[i], tr.d_nonimp_avg(k, i));
      }
    }
  }

  ThresholdSet ts;
  ts.gamma_imp.resize(n);
  ts.gamma_nonimp.resize(n);
  ts.delta.resize(n);
  for (int i = 0; i < n; ++i) {
    ts.gamma_imp[i] = std::max(factor * max_imp[i], 1e-6);
    ts.gamma_nonimp[i] = std::max(factor * max_nonimp[i], 1e-6);
    ts.delta[i] =
        std::max(10.0 * std::max(ts.gamma_imp[i], ts.gamma_nonimp[i]), 1e-4);
  }
  return ts;
}

void apply_thresholds(Scenario& s, const ThresholdSet& ts) {
  const size_t n = static_cast<size_t>(s.graph.size());
  if (ts.gamma_imp.size() != n || ts.gamma_nonimp.size() != n ||
      ts.delta.size() != n) {
    throw ConfigError("threshold lists must have one entry per agent");
  }
  for (size_t i = 0; i < n; ++i) {
    if (!(ts.gamma_imp[i] > 0.0) || !(ts.gamma_nonimp[i] > 0.0) ||
        !(ts.delta[i] > 0.0)) {
      throw ConfigError("thresholds must be positive");
    }
  }
  s.thresholds = ts;
}

namespace {

int tail_start_row(const Trace& trace, double window_s) {
  if (!(window_s > 0.0)) throw ConfigError("tail window must be positive");
  const int steps = trace.steps();
  const int count = std::min<long>(
      steps, static_cast<long>(std::floor(window_s / trace.dt + 1e-6)) + 1);
  return steps - static_cast<int>(std::max<long>(1, count));
}

}  // namespace

double tail_average_input_norm(const Trace& trace, int agent,
                               double window_s) {
  const int start = tail_start_row(trace, window_s);
  double acc = 0.0;
  for (int k = start; k < trace.steps(); ++k) {
    acc += trace.agent_input(k, agent).norm();
  }
  return acc / (trace.steps() - start);
}

double tail_average_eta_norm(const Trace& trace, int agent, double window_s) {
  const int start = tail_start_row(trace, window_s);
  double acc = 0.0;
  for (int k = start; k < trace.steps(); ++k) {
    acc += trace.agent_eta(k, agent).norm();
  }
  return acc / (trace.steps() - start);
}

Eigen::VectorXd tail_average_input(const Trace& trace, int agent,
                                   double window_s) {
  const int start = tail_start_row(trace, window_s);
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(trace.n_u);
  for (int k = start; k < trace.steps(); ++k) {
    acc += trace.agent_input(k, agent);
  }
  return acc / (trace.steps() - start);
}

double max_state_norm(const Trace& trace, double t0, double t1) {
  double worst = 0.0;
  for (int k = 0; k < trace.steps(); ++k) {
    if (trace.t(k) + kTimeEps < t0 || trace.t(k) > t1 + kTimeEps) continue;
    for (int i = 0; i < trace.n_agents; ++i) {
      worst = std::max(worst, trace.agent_state(k, i).norm());
    }
  }
  return worst;
}

DiGraph effective_trust_graph(const Trace& trace, const DiGraph& g,
                              double min_weight) {
  if (g.size() != trace.n_agents) {
    throw DimensionMismatch("trace/graph agent count mismatch");
  }
  const int last = trace.steps() - 1;
  std::vector<Edge> edges;
  for (size_t e = 0; e < trace.omega_edges.size(); ++e) {
    const auto [head, tail] = trace.omega_edges[e];
    const double w_eff = trace.omega(last, static_cast<int>(e)) *
                         trace.xi(last, tail) * g.weight(head, tail);
    if (w_eff > min_weight) edges.push_back({tail, head, w_eff});
  }
  return DiGraph(g.size(), edges);
}

}  // namespace rescon
