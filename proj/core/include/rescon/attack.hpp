#pragma once

#include <complex>
#include <optional>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "rescon/dynamics.hpp"
#include "rescon/graph.hpp"

namespace rescon {

// Autonomous LTI exosystem fdot = Psi f, f(t_start) = f0, emitted through
// output_map to match the injection channel's dimension.
struct LtiGenerator {
  Eigen::MatrixXd psi;
  Eigen::VectorXd f0;
  Eigen::MatrixXd output_map;
};

// Closed-form scalar waveform offset + amplitude*sin(frequency*tau + phase),
// tau measured from t_start, scaled by a channel-dimension direction vector.
// Its harmonic content is declared, never estimated: {0} when offset is
// nonzero, {+-i*frequency} when amplitude is nonzero.
struct WaveformGenerator {
  double offset = 0.0;
  double amplitude = 0.0;
  double frequency = 0.0;  // rad/s
  double phase = 0.0;
  Eigen::VectorXd direction;

  std::vector<std::complex<double>> declared_spectrum() const;
};

enum class AttackChannel { actuator, sensor, link };

struct AttackSpec {
  int target = 0;
  AttackChannel channel = AttackChannel::actuator;
  int link_from = -1;  // tail agent of the corrupted edge (link channel only)
  std::variant<LtiGenerator, WaveformGenerator> generator;
  double t_start = 0.0;
  std::optional<double> t_stop;
};

struct AttackClassification {
  enum class Kind { imp, non_imp };
  Kind kind = Kind::non_imp;
  std::vector<std::complex<double>> e_psi;
  std::vector<std::complex<double>> shared_marginal;  // E_psi matched to E_A^m
};

// Generator output at absolute time t: zero outside [t_start, t_stop]; the
// LTI case is the closed form output_map * exp(psi * (t - t_start)) * f0.
Eigen::VectorXd attack_signal(const AttackSpec& spec, double t);

// Checks generator/channel dimension consistency and index ranges against
// the swarm the spec will be injected into. Throws ConfigError.
void validate_attack_spec(const AttackSpec& spec, const DiGraph& g, int n_x,
                          int n_u);

// Per-agent overall attack at time t: actuator attacks add their signal to
// the target's input; sensor and link corruptions propagate through the
// c*K-weighted neighborhood sums of every agent that consumes the corrupted
// state. Result vectors have input dimension.
std::vector<Eigen::VectorXd> compose_overall_attack(
    const std::vector<AttackSpec>& specs, const DiGraph& g,
    const GainDesign& gains, const AgentDynamics& dyn, double t);

// Generator spectrum versus the agent spectrum: IMP iff every generator
// eigenvalue matches a distinct agent eigenvalue within tolerance (bipartite
// matching, so repeated eigenvalues are counted correctly).
AttackClassification classify_attack(const AttackSpec& spec,
                                     const AgentDynamics& dyn,
                                     double tolerance = 1e-8);

// || sum_k p_k f_k || for left zero-eigenvector p: the steady-state
// obstruction. Zero means the attack is invisible to the consensus value.
double steady_state_residual(const Eigen::VectorXd& p,
                             const std::vector<Eigen::VectorXd>& f);

// Max of steady_state_residual over a uniform time grid on [t0, t1].
double max_steady_state_residual(const Eigen::VectorXd& p,
                                 const std::vector<AttackSpec>& specs,
                                 const DiGraph& g, const GainDesign& gains,
                                 const AgentDynamics& dyn, double t0,
                                 double t1, double dt);

// Destabilization test: a nonzero steady-state residual combined with a
// generator mode on the agents' imaginary axis drives resonant growth.
bool predicts_instability(const AttackClassification& cls,
                          bool residual_nonzero);

}  // namespace rescon
