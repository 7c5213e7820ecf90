#pragma once

#include <iosfwd>

namespace rsf::cli {

/// Process exit codes, one per error class.
enum ExitCode : int {
  kOk = 0,
  kUsage = 64,
  kLoadError = 2,
  kConfigError = 3,
  kDegenerateEvaluation = 4,
  kSplitError = 5,  // DegenerateSplit, NoValidSplit, TreeDegenerate, EmptyNode, EmptyRiskTable
  kCalibrationError = 6,
  kFormatError = 7,
  kOutputError = 8,
  kInternal = 70,
};

/// Runs one command line. Diagnostics go to `err`, informational output to `out`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace rsf::cli
