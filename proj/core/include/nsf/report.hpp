#pragma once

#include <optional>
#include <string>

#include "nsf/config.hpp"

namespace nsf {

// Everything a run writes to report.json. Timing fields go to a separate
// "timing" object so the rest of the report is deterministic.
struct RunReport {
  std::string command;  // "run" or "sweep"
  std::string status;   // "converged", "failed", "invalid"
  int exit_code = 0;
  std::string config_text;  // serialized RunConfig
  std::optional<ValidationReport> validation;
  std::optional<FixedPointReport> fixed_point;
  std::optional<DiagnosticsReport> diagnostics;
  std::string error;
};

std::string to_json(const RunReport& r, int indent = 2);
// Report without the timing block, as used for determinism checks.
std::string to_json_without_timing(const RunReport& r, int indent = 2);

}  // namespace nsf
