#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace cpstir::acceptance {

struct Options {
  /// Multiplies every replication count; 1 is the acceptance configuration.
  double scale = 1.0;
  unsigned workers = 1;
  std::uint64_t seed = 20240601;
};

struct Outcome {
  int id;
  std::string name;
  bool passed;
  std::string measured;
  std::string target;
  std::string detail;
};

/// Criterion ids 1..12.
inline constexpr int kCriteria = 12;

/// "constants" (1-4), "renewal" (5-6), "coupling" (7-8), "criterion" (9-12),
/// or "all". Throws std::invalid_argument for other names.
std::vector<int> suite_criteria(std::string_view suite);

Outcome run_criterion(int id, const Options& options);
std::vector<Outcome> run_suite(std::string_view suite, const Options& options);

/// "AC05 PASS <name>: measured <...>; target <...>; <detail>".
std::string format_outcome(const Outcome& o);

}  // namespace cpstir::acceptance
