#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace framecl {

struct PropertyResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

// Runs the release-gate property suite: gradient fidelity for every loss,
// closed-form values, reduction equivalences, weight monotonicity, the
// threshold-search oracle, and the zero-shot averaging rule.
std::vector<PropertyResult> run_verification_suite();

// Prints one line per property; returns true iff all pass.
bool print_verification_report(std::ostream& os);

}  // namespace framecl
