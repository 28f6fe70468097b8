#pragma once

#include <map>
#include <vector>

#include <Eigen/Dense>

#include "rescon/graph.hpp"

namespace rescon {

// Per-agent mitigation tuning. delta sets the divergence scale at which
// confidence drops to one half; the kappas are first-order filter rates;
// lambda1/lambda2 shape the neighbor-stream likelihood map.
struct TrustConfig {
  double delta = 1000.0;
  double kappa1 = 2.0;
  double kappa2 = 2.0;
  double kappa3 = 2.0;
  double lambda1 = 1.0;
  double lambda2 = 1.0;
  int trust_window = 200;

  void validate() const;  // everything strictly positive
};

// Confidence, self-belief, and per-in-edge trust for one agent. Everything
// starts at 1 (trust until evidence) and stays in [0, 1]; xi and omega are
// kept consistent with their defining min/max after every update.
struct TrustState {
  double c1 = 1.0;
  double c2 = 1.0;
  double xi = 1.0;
  std::map<int, double> eta_raw;  // in-neighbor -> raw trust
  std::map<int, double> omega;    // in-neighbor -> max(xi, eta_raw)

  static TrustState initial(const DiGraph& g, int i);
  void refresh_derived();
};

// One explicit-Euler step of c1' = kappa1 * (delta/(delta + D) - c1),
// clamped to [0, 1]. D below zero is numerical noise and is floored.
double confidence_imp_step(TrustState& state, const TrustConfig& cfg,
                           double d_imp, double dt);

// Same filter at rate kappa2 driven by the Gaussian divergence.
double confidence_nonimp_step(TrustState& state, const TrustConfig& cfg,
                              double d_nonimp, double dt);

double self_belief(const TrustState& state);  // min(c1, c2)

// Likelihood that neighbor j is worth following given the divergence of its
// stream from the neighborhood aggregate: L = 1 - lambda1/(lambda1 +
// exp(-lambda2/D)). D -> 0 (neighbor dominates the aggregate it is compared
// against, the compromised signature) gives L -> 0; large D saturates at
// 1 - lambda1/(lambda1 + 1).
double raw_trust_L(const TrustConfig& cfg, double d);

// Euler step of eta_ij' = kappa3 * (L - eta_ij) from a precomputed stream
// divergence; clamped to [0, 1].
double raw_trust_step(TrustState& state, const TrustConfig& cfg, int j,
                      double d_xj_mi, double dt);

// Contract form: fit windowed Gaussians to the received stream of neighbor
// j and to the neighborhood aggregate normalized by the neighbor count,
// take their KL divergence, then run the filter step above. Throws
// TooFewSamples until both windows hold trust_window samples.
double raw_trust_step(TrustState& state, const TrustConfig& cfg, int j,
                      const std::vector<Eigen::VectorXd>& xj_window,
                      const std::vector<Eigen::VectorXd>& mi_window,
                      int neighbor_count, double dt);

// Omega_ij = max(xi_i, eta_ij) for every in-edge.
std::map<int, double> trust(const TrustState& state);

// eta_tilde_i = sum_j Omega_ij xi_j a_ij (x_j - x_i) + sum_j a_ij omega_ij.
// Channel noise is additive on the link and is not trust-weighted.
Eigen::VectorXd resilient_tracking_error(
    const DiGraph& g, int i, const std::vector<Eigen::VectorXd>& x,
    const std::map<int, double>& omega_i, const std::vector<double>& xi_all,
    const std::map<int, Eigen::VectorXd>* noise = nullptr);

}  // namespace rescon
