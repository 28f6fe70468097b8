#pragma once

#include <string>
#include <vector>

#include "rescon/sim.hpp"

namespace rescon {

// Built-in named scenarios on the five-agent demonstration topology:
//   fig2  attack-free baseline, 40 s
//   fig3  resonant LTI attack on the root agent 1 at t = 20, 60 s
//   fig4  the same attack moved to the non-root agent 5, 60 s
//   fig6  fig4 with mitigation enabled
//   fig7  bounded-waveform attack 10 + 5 sin(2 tau) on agent 5, 60 s
//   fig9  fig7 with mitigation enabled
// All use sigma = 0.01 channel noise, dt = 1e-3, LQR gain design with
// identity weights, and a 10 s detector warmup.
std::vector<std::string> preset_names();
bool is_preset(const std::string& name);

// Throws ConfigError for unknown names.
Scenario preset_scenario(const std::string& name);

// Canonical JSON form of the preset, exactly serialize_scenario(preset);
// the bundled scenario files carry these bytes.
std::string preset_text(const std::string& name);

}  // namespace rescon
