#include "rescon/detection.hpp"

#include <algorithm>
#include <cmath>

#include "rescon/errors.hpp"

namespace rescon {

void DetectorConfig::validate() const {
  if (window < 8) throw ConfigError("detector window must be at least 8");
  if (!(gamma_imp > 0.0) || !(gamma_nonimp > 0.0)) {
    throw ConfigError("detector thresholds must be positive");
  }
  if (warmup_time < 0.0) throw ConfigError("warmup time must be nonnegative");
  if (nominal.Sigma.rows() != nominal.Sigma.cols() ||
      nominal.mu.size() != nominal.Sigma.rows()) {
    throw ConfigError("detector nominal distribution is malformed");
  }
}

DetectorState::DetectorState(const DetectorConfig& cfg, int n_x)
    : tau_win(cfg.window),
      phi_win(cfg.window),
      eta_win(cfg.window, n_x),
      kl_imp_win(cfg.window),
      kl_nonimp_win(cfg.window) {
  cfg.validate();
}

std::pair<double, double> error_sequences(
    const DiGraph& g, int i, const std::vector<Eigen::VectorXd>& received,
    const Eigen::VectorXd& own, const std::map<int, Eigen::VectorXd>* noise) {
  if (i < 0 || i >= g.size()) throw ConfigError("agent index out of range");
  if (static_cast<int>(received.size()) != g.size()) {
    throw DimensionMismatch("received-state list size must match agent count");
  }
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(own.size());
  double phi = 0.0;
  for (const int j : g.in_neighbors(i)) {
    const double a = g.weight(i, j);
    Eigen::VectorXd d = received[j] - own;
    if (noise != nullptr) {
      const auto it = noise->find(j);
      if (it != noise->end()) d += it->second;
    }
    acc += a * d;
    phi += a * d.norm();
  }
  return {acc.norm(), phi};
}

void observe_imp(DetectorState& state, double tau, double phi) {
  state.tau_win.push(tau);
  state.phi_win.push(phi);
}

void observe_nonimp(DetectorState& state, const Eigen::VectorXd& eta) {
  state.eta_win.push(eta);
}

Hypothesis imp_detector_step(DetectorState& state, const DetectorConfig& cfg,
                             double tau, double phi) {
  observe_imp(state, tau, phi);
  if (!state.tau_win.full()) {
    throw TooFewSamples("divergence test needs a full sample window");
  }
  const FoldedGaussianParams phi_fit =
      folded_fit_from_moments(state.phi_win.mean(), state.phi_win.mean_sq());
  const FoldedGaussianParams tau_fit =
      folded_fit_from_moments(state.tau_win.mean(), state.tau_win.mean_sq());
  // The truncated closed form can go negative where its expansion is poor;
  // divergence is nonnegative by definition, so floor each step at zero.
  state.d_imp = std::max(0.0, folded_gaussian_kl(phi_fit, tau_fit));
  state.kl_imp_win.push(state.d_imp);
  state.d_imp_avg = state.kl_imp_win.mean();
  state.h_imp =
      state.d_imp_avg > cfg.gamma_imp ? Hypothesis::h1 : Hypothesis::h0;
  return state.h_imp;
}

Hypothesis nonimp_detector_step(DetectorState& state,
                                const DetectorConfig& cfg,
                                const Eigen::VectorXd& eta) {
  observe_nonimp(state, eta);
  if (!state.eta_win.full()) {
    throw TooFewSamples("divergence test needs a full sample window");
  }
  const GaussianParams fit = state.eta_win.gaussian(kCovarianceFloor);
  state.d_nonimp = std::max(0.0, gaussian_kl(fit, cfg.nominal));
  state.kl_nonimp_win.push(state.d_nonimp);
  state.d_nonimp_avg = state.kl_nonimp_win.mean();
  state.h_nonimp =
      state.d_nonimp_avg > cfg.gamma_nonimp ? Hypothesis::h1 : Hypothesis::h0;
  return state.h_nonimp;
}

}  // namespace rescon
