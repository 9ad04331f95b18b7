#pragma once

// Dispatch of problem documents and the built-in reproductions.

#include <string>
#include <vector>

#include "opsyslab/problem.hpp"

namespace opsyslab {

enum ExitCode : int { kExitOk = 0, kExitInput = 2, kExitNumerical = 3 };

struct Report {
  json body;  // "schema", "kind", "status", "verdict", "results", "problem", ...
  int exit_code = kExitOk;
};

/// Runs one document. Never throws: input errors give exit code 2 and
/// numerical failures (or a reproduction that misses its target) give 3.
Report run(const ProblemDocument& doc);

/// Report for a failure that happened before a document could run.
Report failure_report(const std::string& message, int exit_code);

/// Identifiers accepted by the repro kind.
std::vector<std::string> repro_ids();

/// Report with its "wall_time_ms" field removed, for comparisons.
json without_timing(const json& report);

/// Plain-text rendering of a report.
std::string render_table(const json& report);

}  // namespace opsyslab
