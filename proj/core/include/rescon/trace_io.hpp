#pragma once

#include <string>

#include "rescon/sim.hpp"

namespace rescon {

// CSV and JSON exporters for simulation traces. Column orders are frozen
// (documented in the README); numeric CSV fields are printed with %.10g so
// identical traces yield byte-identical files. Open/write failures throw
// ConfigError.

// Full-resolution trace: t, states, tracking errors, applied inputs,
// overall attack, error sequences, windowed divergences, hypotheses,
// self-beliefs, trusts.
void write_trace_csv(const Trace& trace, const std::string& path);

// Run-level metrics and flags: consensus tail metrics over all agents,
// divergence report, detection latencies (when an attack is present),
// tail-averaged input and tracking-error magnitudes.
std::string summary_json_text(const Trace& trace);
void write_summary_json(const Trace& trace, const std::string& path);

// Plot-ready projections, strided down to at most ~6000 rows (the final
// row is always included).
void write_plot_states_csv(const Trace& trace, const std::string& path);
void write_plot_detectors_csv(const Trace& trace, const std::string& path);
void write_plot_trust_csv(const Trace& trace, const std::string& path);

// Writes trace.csv, summary.json, plot_states.csv, plot_detectors.csv,
// and plot_trust.csv into out_dir, creating the directory if needed.
void write_run_outputs(const Trace& trace, const std::string& out_dir);

}  // namespace rescon
