#pragma once

#include <string>
#include <vector>

#include "twistdn/config.hpp"

namespace twistdn {

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct VerifyReport {
  std::vector<CheckResult> checks;
  bool all_pass = true;
};

// Runs the whole invariant suite at smoke scale: algebraic identities of the
// conductivity fields, mesh structure, discrete coercivity, oracle
// agreement, DN operator identities, surrogate scaling, synthesis
// consistency and a small end-to-end inversion. Deterministic: two runs from
// the same config serialize to identical bytes.
VerifyReport run_verify(const RunConfig& config);

std::string verify_report_to_json(const VerifyReport& report);

}  // namespace twistdn
