#pragma once

#include <functional>
#include <string>
#include <vector>

namespace rescon {

// Outcome of one acceptance criterion. `expected_fail` marks the one gate
// documented to fail with the divergence formula implemented as printed
// (see README); everything else must pass.
struct CriterionResult {
  int id = 0;
  std::string title;
  bool passed = false;
  bool expected_fail = false;
  std::string detail;               // measured values against pinned gates
  std::vector<std::string> notes;   // informational context lines
};

// Runs the full nine-criterion acceptance gate (about 80 simulations,
// ~2 minutes). The progress callback, when set, receives one short line
// per stage.
std::vector<CriterionResult> run_acceptance_suite(
    const std::function<void(const std::string&)>& progress = {});

// Number of surprises: criteria that failed unexpectedly plus criteria
// that passed despite being documented as expected failures. Zero means
// the suite landed exactly as documented.
int acceptance_exit_code(const std::vector<CriterionResult>& results);

}  // namespace rescon
