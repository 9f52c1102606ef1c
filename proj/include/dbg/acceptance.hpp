#pragma once

#include <functional>
#include <string>
#include <vector>

#include "dbg/io.hpp"

namespace dbg {

struct CriterionResult {
  int id = 0;
  std::string title;
  bool checks_pass = false;     // numeric checks only
  double runtime_limit = 0.0;   // seconds, 0 when the criterion has none
  double seconds = 0.0;
  bool pass = false;            // checks and runtime limit
  std::string summary;          // one line of key numbers
  Json detail;                  // deterministic numbers behind the verdict
};

struct AcceptanceOptions {
  unsigned threads = 0;   // 0: hardware concurrency
  std::vector<int> only;  // empty: all twelve
};

/// Runs the acceptance criteria in order; `on_result` sees each result as it completes.
std::vector<CriterionResult> run_acceptance(
    const AcceptanceOptions& options,
    const std::function<void(const CriterionResult&)>& on_result = {});

/// "[PASS] 3 ..." line with runtime.
std::string format_line(const CriterionResult& r);

/// Verdicts and details without timings (byte-stable for a fixed build).
Json acceptance_json(const std::vector<CriterionResult>& results);
/// Per-criterion seconds and limits.
Json timings_json(const std::vector<CriterionResult>& results);

}  // namespace dbg
