#include "rescon/mitigation.hpp"

#include <algorithm>
#include <cmath>

#include "rescon/errors.hpp"
#include "rescon/stats.hpp"

namespace rescon {

namespace {

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

double confidence_step(double c, double kappa, double delta, double d,
                       double dt) {
  if (dt <= 0.0) throw ConfigError("filter step needs positive dt");
  const double chi = delta / (delta + std::max(0.0, d));
  return clamp01(c + dt * kappa * (chi - c));
}

}  // namespace

void TrustConfig::validate() const {
  if (!(delta > 0.0) || !(kappa1 > 0.0) || !(kappa2 > 0.0) ||
      !(kappa3 > 0.0) || !(lambda1 > 0.0) || !(lambda2 > 0.0)) {
    throw ConfigError("trust parameters must be strictly positive");
  }
  if (trust_window < 8) throw ConfigError("trust window must be at least 8");
}

TrustState TrustState::initial(const DiGraph& g, int i) {
  TrustState s;
  for (const int j : g.in_neighbors(i)) {
    s.eta_raw[j] = 1.0;
    s.omega[j] = 1.0;
  }
  return s;
}

void TrustState::refresh_derived() {
  xi = std::min(c1, c2);
  for (auto& [j, om] : omega) om = std::max(xi, eta_raw.at(j));
}

double confidence_imp_step(TrustState& state, const TrustConfig& cfg,
                           double d_imp, double dt) {
  state.c1 = confidence_step(state.c1, cfg.kappa1, cfg.delta, d_imp, dt);
  state.refresh_derived();
  return state.c1;
}

double confidence_nonimp_step(TrustState& state, const TrustConfig& cfg,
                              double d_nonimp, double dt) {
  state.c2 = confidence_step(state.c2, cfg.kappa2, cfg.delta, d_nonimp, dt);
  state.refresh_derived();
  return state.c2;
}

double self_belief(const TrustState& state) {
  return std::min(state.c1, state.c2);
}

double raw_trust_L(const TrustConfig& cfg, double d) {
  // exp(-lambda2/D) -> 0 as D -> 0+, so L is continuous with value 0 there.
  if (d <= 0.0) return 0.0;
  return 1.0 - cfg.lambda1 / (cfg.lambda1 + std::exp(-cfg.lambda2 / d));
}

double raw_trust_step(TrustState& state, const TrustConfig& cfg, int j,
                      double d_xj_mi, double dt) {
  if (dt <= 0.0) throw ConfigError("filter step needs positive dt");
  const auto it = state.eta_raw.find(j);
  if (it == state.eta_raw.end()) {
    throw ConfigError("trust update for a non-neighbor");
  }
  const double L = raw_trust_L(cfg, d_xj_mi);
  it->second = clamp01(it->second + dt * cfg.kappa3 * (L - it->second));
  state.refresh_derived();
  return it->second;
}

double raw_trust_step(TrustState& state, const TrustConfig& cfg, int j,
                      const std::vector<Eigen::VectorXd>& xj_window,
                      const std::vector<Eigen::VectorXd>& mi_window,
                      int neighbor_count, double dt) {
  if (neighbor_count < 1) throw ConfigError("trust needs a nonempty neighborhood");
  if (static_cast<int>(xj_window.size()) < cfg.trust_window ||
      static_cast<int>(mi_window.size()) < cfg.trust_window) {
    throw TooFewSamples("trust windows not yet full");
  }
  const GaussianParams xj_fit = window_estimate_gaussian(xj_window);
  std::vector<Eigen::VectorXd> scaled;
  scaled.reserve(mi_window.size());
  for (const auto& m : mi_window) {
    scaled.push_back(m / static_cast<double>(neighbor_count));
  }
  const GaussianParams mi_fit = window_estimate_gaussian(scaled);
  const double d = std::max(0.0, gaussian_kl(xj_fit, mi_fit));
  return raw_trust_step(state, cfg, j, d, dt);
}

std::map<int, double> trust(const TrustState& state) {
  std::map<int, double> out;
  const double xi = self_belief(state);
  for (const auto& [j, eta] : state.eta_raw) out[j] = std::max(xi, eta);
  return out;
}

Eigen::VectorXd resilient_tracking_error(
    const DiGraph& g, int i, const std::vector<Eigen::VectorXd>& x,
    const std::map<int, double>& omega_i, const std::vector<double>& xi_all,
    const std::map<int, Eigen::VectorXd>* noise) {
  if (i < 0 || i >= g.size()) throw ConfigError("agent index out of range");
  if (static_cast<int>(x.size()) != g.size() ||
      static_cast<int>(xi_all.size()) != g.size()) {
    throw DimensionMismatch("state/belief list size must match agent count");
  }
  Eigen::VectorXd eta = Eigen::VectorXd::Zero(x[i].size());
  for (const int j : g.in_neighbors(i)) {
    const double a = g.weight(i, j);
    const auto it = omega_i.find(j);
    const double om = it == omega_i.end() ? 1.0 : it->second;
    eta += om * xi_all[j] * a * (x[j] - x[i]);
    if (noise != nullptr) {
      const auto nit = noise->find(j);
      if (nit != noise->end()) eta += a * nit->second;
    }
  }
  return eta;
}

}  // namespace rescon
