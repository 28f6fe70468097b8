#pragma once

#include <string>

#include "rescon/sim.hpp"

namespace rescon {

// JSON scenario documents mirror the Scenario struct field for field.
// Agent indices in files are 1-based (edges, attack targets, link sources);
// they are converted to 0-based indices on load and back on save.
//
// Unknown keys at any nesting level, wrong JSON types, and malformed
// documents throw SchemaError. Semantically invalid but well-formed
// documents (bad dimensions, dangling edges, non-positive dt, ...) throw
// ConfigError from Scenario::validate and the constructors it calls.
Scenario parse_scenario_text(const std::string& text);
Scenario load_scenario_file(const std::string& path);

// Deterministic serialization: alphabetical keys, two-space indent,
// trailing newline. parse(serialize(s)) reproduces s, and
// serialize(parse(text)) is a fixed point of serialize-after-parse.
std::string serialize_scenario(const Scenario& s);

// Threshold files carry per-agent detector thresholds and confidence
// scales plus the calibration settings that produced them.
struct ThresholdFile {
  ThresholdSet thresholds;
  int runs = 0;        // 0 when the file carries no provenance
  double factor = 0.0;
};

ThresholdFile parse_thresholds_text(const std::string& text);
ThresholdFile load_thresholds_file(const std::string& path);
std::string serialize_thresholds(const ThresholdSet& ts, int runs,
                                 double factor);

// Shared helper: read a whole file, throwing SchemaError when unreadable.
std::string read_text_file(const std::string& path);

}  // namespace rescon
