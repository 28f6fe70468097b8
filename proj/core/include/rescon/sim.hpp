#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "rescon/attack.hpp"
#include "rescon/detection.hpp"
#include "rescon/dynamics.hpp"
#include "rescon/graph.hpp"
#include "rescon/mitigation.hpp"

namespace rescon {

// Per-agent calibrated detector thresholds and confidence scales.
struct ThresholdSet {
  std::vector<double> gamma_imp;
  std::vector<double> gamma_nonimp;
  std::vector<double> delta;
};

// Complete description of one simulation run. detector_cfg and trust_cfg
// are per-swarm bases; per-agent nominals are derived from the noise model
// and per-agent thresholds come from `thresholds` when present.
struct Scenario {
  std::string name;
  DiGraph graph{1};
  AgentDynamics dynamics;
  std::optional<GainDesign> explicit_gains;
  Eigen::MatrixXd Q;  // gain design request, identity when empty
  Eigen::MatrixXd R;
  double safety_factor = 1.2;
  NoiseModel noise;
  std::vector<AttackSpec> attacks;
  DetectorConfig detector_cfg;
  TrustConfig trust_cfg;
  std::optional<ThresholdSet> thresholds;
  bool mitigation_enabled = false;
  double t_end = 40.0;
  double dt = 1e-3;
  std::vector<Eigen::VectorXd> x0;  // empty selects the deterministic spread
  std::uint64_t seed = 0;
  double divergence_cap = 150.0;

  void validate() const;  // throws ConfigError on invariant violations

  // x_i(0) components 0.5 * (i + 1) with alternating sign, the fixed
  // default spread used when x0 is empty.
  static std::vector<Eigen::VectorXd> default_initial_states(int n_agents,
                                                             int n_x);
};

// Flat per-step recordings (one row per step, agent-major columns) plus
// run-level flags. Logged states are clamped to +-divergence_cap; the
// integrator itself keeps running on the true values.
struct Trace {
  std::string scenario_name;
  std::uint64_t seed = 0;
  int n_agents = 0;
  int n_x = 0;
  int n_u = 0;
  double dt = 0.0;
  double t_end = 0.0;
  double divergence_cap = 0.0;
  bool mitigation_enabled = false;
  bool assumption_violated = false;  // drift matrix has an unstable mode
  double attack_t_start = std::numeric_limits<double>::quiet_NaN();
  std::vector<std::pair<int, int>> omega_edges;  // (head, tail), ascending

  Eigen::VectorXd t;
  Eigen::MatrixXd states;        // (steps) x (n_agents * n_x)
  Eigen::MatrixXd eta_used;      // tracking error driving the control
  Eigen::MatrixXd u_c;           // applied input including actuator attack
  Eigen::MatrixXd f_overall;     // per-agent overall attack decomposition
  Eigen::MatrixXd tau;           // (steps) x n_agents
  Eigen::MatrixXd phi;
  Eigen::MatrixXd d_imp_avg;
  Eigen::MatrixXd d_nonimp_avg;
  Eigen::MatrixXi h_imp;         // 0 = H0, 1 = H1
  Eigen::MatrixXi h_nonimp;
  Eigen::MatrixXd xi;            // self-beliefs
  Eigen::MatrixXd omega;         // trusts, one column per omega_edges entry
  Eigen::VectorXd consensus_curve;  // max pairwise state distance per step

  bool diverged = false;
  std::vector<double> divergence_time;  // per agent, NaN when none

  int steps() const { return static_cast<int>(t.size()); }
  Eigen::VectorXd agent_state(int step, int i) const;
  Eigen::VectorXd agent_input(int step, int i) const;
  Eigen::VectorXd agent_eta(int step, int i) const;
};

enum class DetectorKind { imp, nonimp };

struct ConsensusMetrics {
  double max_pairwise = 0.0;    // max over the tail window
  double tail_average = 0.0;    // mean over the tail window
  std::vector<double> deviation_from_subset_mean;  // per agent, tail mean
  bool subset_diverged = false;
};

// Deterministic scenario execution: same scenario and seed give a
// bit-identical trace. Record count is floor(t_end/dt) + 1; integration
// advances between records with the recorded input held constant.
Trace run_scenario(const Scenario& s);

// Disagreement metrics over the trace tail (default final 10%), restricted
// to `subset` for the pairwise numbers; deviations from the subset mean are
// reported for every agent. Divergence of a subset member saturates the
// pairwise metrics to +infinity.
ConsensusMetrics consensus_metrics(const Trace& trace,
                                   const std::vector<int>& subset,
                                   double tail_fraction = 0.1);

// First time the chosen detector reports H1 at or after the attack start,
// minus the attack start; nullopt when it never fires. Throws ConfigError
// when the trace has no attack.
std::optional<double> detection_latency(const Trace& trace, int agent,
                                        DetectorKind kind);

// Attack-free calibration: `runs` seeded simulations (seed, seed+1, ...),
// per-agent gamma = max(factor * max observed windowed average, 1e-6) for
// each detector, delta = max(10 * max(gamma_imp, gamma_nonimp), 1e-4).
// Throws RefusesAttackScenario when the scenario carries attacks.
ThresholdSet calibrate_thresholds(const Scenario& base, int runs,
                                  double factor);

// Installs per-agent thresholds (validating sizes against the graph).
void apply_thresholds(Scenario& s, const ThresholdSet& ts);

// Mean over the trailing window_s seconds of ||quantity|| per step.
double tail_average_input_norm(const Trace& trace, int agent,
                               double window_s);
double tail_average_eta_norm(const Trace& trace, int agent, double window_s);

// Time-average of the input vector itself over the trailing window_s
// seconds (norm-of-mean instead of mean-of-norms).
Eigen::VectorXd tail_average_input(const Trace& trace, int agent,
                                   double window_s);

// Largest ||x_i(t)|| over [t0, t1] from the logged states.
double max_state_norm(const Trace& trace, double t0, double t1);

// Graph of edges whose effective weight Omega_ij * xi_j * a_ij exceeds
// min_weight at the final recorded step.
DiGraph effective_trust_graph(const Trace& trace, const DiGraph& g,
                              double min_weight = 1e-3);

}  // namespace rescon
