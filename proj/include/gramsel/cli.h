#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace gramsel::cli {

/// Exit codes of the gramsel command line tool.
enum ExitCode : int {
  kOk = 0,
  kInvalidInput = 1,
  kNumericalFailure = 2,
  kUncontrollable = 3,
  kCounterexampleMismatch = 4,
  kSamplingExhausted = 5,
  kEnumerationLimit = 6,
  kVerificationFailed = 7,
};

/// Runs one command. args excludes the program name. Results go to `out` unless the
/// command was given --out; diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace gramsel::cli
