#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace stimtomo {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool passed = false;
  std::string detail;    ///< deterministic: no timings
  double seconds = 0.0;  ///< wall time, for console output only
};

struct AcceptanceOptions {
  std::uint64_t seed = 42;
  int threads = 0;
  /// Called after each criterion finishes.
  std::function<void(const CriterionResult&)> on_result;
};

/// Runs the twelve acceptance criteria in order.
std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& opts = {});

/// "PASS  3  coupling cancellation: ..." without the timing.
std::string format_criterion(const CriterionResult& r);

}  // namespace stimtomo
