#include "rescon/presets.hpp"

#include "rescon/errors.hpp"
#include "rescon/scenario_io.hpp"

namespace rescon {

namespace {

AgentDynamics oscillator_dynamics() {
  AgentDynamics dyn;
  dyn.A.resize(2, 2);
  dyn.A << 0.0, -1.0, 1.0, 0.0;
  dyn.B.resize(2, 1);
  dyn.B << 1.0, 0.0;
  return dyn;
}

Scenario base_scenario() {
  Scenario s;
  s.graph = canonical_five_agent_graph();
  s.dynamics = oscillator_dynamics();
  s.Q = Eigen::MatrixXd::Identity(2, 2);
  s.R = Eigen::MatrixXd::Identity(1, 1);
  s.safety_factor = 1.2;
  s.noise.default_cov = 0.01 * 0.01 * Eigen::MatrixXd::Identity(2, 2);
  s.noise.rng_seed = 7;
  s.dt = 1e-3;
  s.detector_cfg.window = 200;
  s.detector_cfg.warmup_time = 10.0;
  return s;
}

// Resonant generator: the rotation exosystem shares the agents' +-i modes,
// emitting 20 sin(tau) on the target's actuator.
AttackSpec resonant_actuator_attack(int target) {
  AttackSpec spec;
  spec.channel = AttackChannel::actuator;
  spec.target = target;
  spec.t_start = 20.0;
  LtiGenerator gen;
  gen.psi.resize(2, 2);
  gen.psi << 0.0, -1.0, 1.0, 0.0;
  gen.f0.resize(2);
  gen.f0 << 20.0, 0.0;
  gen.output_map.resize(1, 2);
  gen.output_map << 0.0, 1.0;
  spec.generator = gen;
  return spec;
}

// Bounded waveform 10 + 5 sin(2 tau): generator spectrum {0, +-2i} shares
// nothing with the agents' +-i modes.
AttackSpec offset_waveform_attack(int target) {
  AttackSpec spec;
  spec.channel = AttackChannel::actuator;
  spec.target = target;
  spec.t_start = 20.0;
  WaveformGenerator gen;
  gen.offset = 10.0;
  gen.amplitude = 5.0;
  gen.frequency = 2.0;
  gen.phase = 0.0;
  gen.direction = Eigen::VectorXd::Ones(1);
  spec.generator = gen;
  return spec;
}

}  // namespace

std::vector<std::string> preset_names() {
  return {"fig2", "fig3", "fig4", "fig6", "fig7", "fig9"};
}

bool is_preset(const std::string& name) {
  for (const std::string& n : preset_names()) {
    if (n == name) return true;
  }
  return false;
}

Scenario preset_scenario(const std::string& name) {
  Scenario s = base_scenario();
  s.name = name;
  if (name == "fig2") {
    s.t_end = 40.0;
    s.seed = 1;
  } else if (name == "fig3") {
    s.t_end = 60.0;
    s.seed = 2;
    s.attacks.push_back(resonant_actuator_attack(0));
  } else if (name == "fig4") {
    s.t_end = 60.0;
    s.seed = 42;
    s.attacks.push_back(resonant_actuator_attack(4));
  } else if (name == "fig6") {
    s.t_end = 60.0;
    s.seed = 6;
    s.attacks.push_back(resonant_actuator_attack(4));
    s.mitigation_enabled = true;
  } else if (name == "fig7") {
    s.t_end = 60.0;
    s.seed = 7;
    s.attacks.push_back(offset_waveform_attack(4));
  } else if (name == "fig9") {
    s.t_end = 60.0;
    s.seed = 9;
    s.attacks.push_back(offset_waveform_attack(4));
    s.mitigation_enabled = true;
  } else {
    throw ConfigError("unknown preset: " + name);
  }
  return s;
}

std::string preset_text(const std::string& name) {
  return serialize_scenario(preset_scenario(name));
}

}  // namespace rescon
