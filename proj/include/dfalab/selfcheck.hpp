#pragma once

#include <string>
#include <vector>

namespace dfalab {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Fast in-process verification: finite-difference gradient checks plus the
/// core invariants (determinism, strategy degeneracy, Pareto dominance,
/// power-law recovery, ledger arithmetic). Runs in well under a minute.
std::vector<CheckResult> run_self_checks();

}  // namespace dfalab
