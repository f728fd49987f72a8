#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace cpstir::cli {

enum ExitCode : int {
  kOk = 0,
  kConfigError = 1,
  kInvariantBreach = 2,
  kTruncationDominated = 3,
};

/// Fraction of truncated replications above which a result is reported as
/// truncation-dominated.
inline constexpr double kTruncationDominatedFraction = 0.5;

/// Runs one subcommand. `args` excludes the program name. Tables go to
/// `--out` (or `out` when absent or "-"); the summary line, warnings and
/// errors go to `diag`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& diag);

int main(int argc, char** argv);

}  // namespace cpstir::cli
