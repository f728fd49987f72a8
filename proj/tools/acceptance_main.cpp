#include <chrono>
#include <cstdio>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cpstir/acceptance.hpp"

int main(int argc, char** argv) {
  CLI::App app{"cpstir acceptance suite"};
  std::string suite = "all";
  std::vector<int> only;
  cpstir::acceptance::Options options;
  app.add_option("--suite", suite, "constants, renewal, coupling, criterion or all")->capture_default_str();
  app.add_option("--criterion", only, "run only these criterion ids")->check(CLI::Range(1, 12));
  app.add_option("--scale", options.scale, "replication multiplier")->capture_default_str()->check(
      CLI::PositiveNumber);
  app.add_option("--workers", options.workers, "worker threads")->capture_default_str()->check(CLI::Range(1u, 256u));
  app.add_option("--seed", options.seed, "master seed")->capture_default_str();
  CLI11_PARSE(app, argc, argv);

  try {
    const auto ids = only.empty() ? cpstir::acceptance::suite_criteria(suite) : only;
    int failed = 0;
    for (int id : ids) {
      const auto start = std::chrono::steady_clock::now();
      const auto outcome = cpstir::acceptance::run_criterion(id, options);
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      std::cout << cpstir::acceptance::format_outcome(outcome) << std::endl;
      std::fprintf(stderr, "AC%02d took %.1fs\n", id, secs);
      if (!outcome.passed) ++failed;
    }
    std::cout << (failed == 0 ? "ALL PASS" : std::to_string(failed) + " FAILED") << " (" << ids.size()
              << " criteria)" << std::endl;
    return failed == 0 ? 0 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
