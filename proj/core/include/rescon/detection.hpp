#pragma once

#include <map>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "rescon/graph.hpp"
#include "rescon/stats.hpp"
#include "rescon/window.hpp"

namespace rescon {

enum class Hypothesis { h0, h1 };

// Per-agent detector tuning. `nominal` is the attack-free distribution of
// the noisy tracking error, N(0, sum_j a_ij^2 Sigma_ij + floor * I).
struct DetectorConfig {
  int window = 200;          // samples per sliding window
  double warmup_time = 10.0; // s before hypotheses are evaluated
  double gamma_imp = 1.0;
  double gamma_nonimp = 100.0;
  GaussianParams nominal;

  void validate() const;  // window >= 8, thresholds > 0, nominal square
};

// Sliding windows plus the latest divergence outputs for one agent. The
// windowed averages are always recomputed from buffer contents; hypotheses
// always reflect the latest threshold comparison.
struct DetectorState {
  RollingScalarWindow tau_win;
  RollingScalarWindow phi_win;
  RollingVectorWindow eta_win;
  RollingScalarWindow kl_imp_win;     // per-step folded divergences
  RollingScalarWindow kl_nonimp_win;  // per-step gaussian divergences

  double d_imp = 0.0;         // latest per-step divergence, floored at 0
  double d_nonimp = 0.0;
  double d_imp_avg = 0.0;     // window average D-bar
  double d_nonimp_avg = 0.0;
  Hypothesis h_imp = Hypothesis::h0;
  Hypothesis h_nonimp = Hypothesis::h0;

  DetectorState(const DetectorConfig& cfg, int n_x);
};

// tau = ||sum_j a_ij d_ij||, phi = sum_j a_ij ||d_ij|| with
// d_ij = received[j] - own + omega_ij. The two coincide for a single
// neighbor and diverge under cancellation, which is what the folded test
// exploits. Reads only agent i's in-edges.
std::pair<double, double> error_sequences(
    const DiGraph& g, int i, const std::vector<Eigen::VectorXd>& received,
    const Eigen::VectorXd& own,
    const std::map<int, Eigen::VectorXd>* noise = nullptr);

// Push-only updates used during warmup, before hypotheses are evaluated.
void observe_imp(DetectorState& state, double tau, double phi);
void observe_nonimp(DetectorState& state, const Eigen::VectorXd& eta);

// Full update: push the sample, fit folded Gaussians to the tau and phi
// windows, take their KL divergence (floored at 0), average it over the
// window, and compare against gamma_imp. Throws TooFewSamples until the
// sample window is full.
Hypothesis imp_detector_step(DetectorState& state, const DetectorConfig& cfg,
                             double tau, double phi);

// Same structure for the Gaussian test: fit the tracking-error window and
// compare its divergence from cfg.nominal against gamma_nonimp.
Hypothesis nonimp_detector_step(DetectorState& state,
                                const DetectorConfig& cfg,
                                const Eigen::VectorXd& eta);

}  // namespace rescon
