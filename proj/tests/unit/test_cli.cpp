#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cpstir/cli.hpp"
#include "cpstir/report.hpp"

namespace {

struct Run {
  int code;
  std::string out;
  std::string diag;
};

Run run(const std::vector<std::string>& args) {
  std::ostringstream out, diag;
  const int code = cpstir::cli::run(args, out, diag);
  return {code, out.str(), diag.str()};
}

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("cpstir_test_" + name);
}

}  // namespace

TEST_CASE("same configuration twice gives byte-identical CSV") {
  const std::vector<std::string> args{"excursion-mean", "--kind", "X", "--d", "2", "--reps", "20000", "--seed", "7"};
  const auto a = run(args), b = run(args);
  CHECK(a.code == cpstir::cli::kOk);
  CHECK(a.out == b.out);
  CHECK(a.out.rfind("# cpstir ", 0) == 0);
  CHECK(a.out.find("seed=7 schema=excursion-mean/v1") != std::string::npos);
  CHECK(a.diag.find("+-") != std::string::npos);
}

TEST_CASE("worker count never changes results") {
  for (const std::string cmd : {"renewal-ratio", "coupled-run", "local-time"}) {
    std::vector<std::string> args{cmd, "--reps", "3000", "--seed", "5"};
    if (cmd == "renewal-ratio") args.insert(args.end(), {"--t", "1e4"});
    if (cmd == "coupled-run") args.insert(args.end(), {"--t", "1"});
    if (cmd == "local-time") args.insert(args.end(), {"--t", "10", "100"});
    auto one = args, four = args;
    one.insert(one.end(), {"--workers", "1"});
    four.insert(four.end(), {"--workers", "4"});
    const auto a = run(one), b = run(four);
    CHECK(a.code == 0);
    CHECK(a.out == b.out);
  }
}

TEST_CASE("configuration round-trips and flags override the file") {
  const auto dumped = run({"renewal-ratio", "--u2", "two:0.5,0.5,1.5", "--t", "1000", "--reps", "50", "--seed", "9",
                           "--dump-config"});
  REQUIRE(dumped.code == 0);
  const auto path = temp_file("config.ini");
  std::ofstream(path) << dumped.out;
  const auto again = run({"--config", path.string(), "--dump-config"});
  CHECK(again.out == dumped.out);

  const auto from_file = run({"--config", path.string()});
  const auto from_flags =
      run({"renewal-ratio", "--u2", "two:0.5,0.5,1.5", "--t", "1000", "--reps", "50", "--seed", "9"});
  CHECK(from_file.code == 0);
  CHECK(from_file.out == from_flags.out);

  const auto overridden = run({"renewal-ratio", "--config", path.string(), "--reps", "60"});
  CHECK(overridden.out.find(",60,") != std::string::npos);
  std::filesystem::remove(path);
}

TEST_CASE("json output and output files") {
  const auto path = temp_file("bound.json");
  const auto r = run({"bound", "--d", "3", "--N", "100", "--format", "json", "--out", path.string()});
  CHECK(r.code == 0);
  CHECK(r.out.empty());
  std::ifstream in(path);
  const auto j = nlohmann::json::parse(in);
  CHECK(j["schema"] == "bound/v1");
  CHECK(j["rows"][0]["lower_bound"].get<double>() == doctest::Approx(1.000861).epsilon(1e-6));
  std::filesystem::remove(path);
}

TEST_CASE("exit codes") {
  CHECK(run({"excursion-mean", "--d", "7"}).code == cpstir::cli::kConfigError);
  CHECK(run({"nosuch"}).code == cpstir::cli::kConfigError);
  CHECK(run({}).code == cpstir::cli::kConfigError);
  CHECK(run({"renewal-ratio", "--u1", "weird:1", "--reps", "10"}).code == cpstir::cli::kConfigError);
  const auto bad = run({"delta-max", "--u2", "exp:2", "--reps", "10"});
  CHECK(bad.code == cpstir::cli::kConfigError);
  CHECK(bad.diag.find("error:") != std::string::npos);
  const auto trunc = run({"psi-mean", "--lambda", "3", "--t", "10", "--cap", "50", "--reps", "20"});
  CHECK(trunc.code == cpstir::cli::kTruncationDominated);
  CHECK(trunc.diag.find("truncated") != std::string::npos);
  CHECK(run({"--help"}).code == 0);
}

TEST_CASE("subcommands produce their schemas") {
  const std::vector<std::vector<std::string>> cases{
      {"local-time", "--kind", "Y", "--t", "10", "100", "--slope", "--reps", "200"},
      {"green-constant", "--reps", "200", "--steps", "200"},
      {"delta-max", "--reps", "100", "--k", "10"},
      {"nt-sublinearity", "--reps", "50"},
      {"kappa-bound", "--reps", "100"},
      {"psi-mean", "--reps", "100"},
      {"coupled-run", "--reps", "20", "--t", "1"},
      {"coupled-run", "--events", "--t", "0.5"},
      {"event-e", "--reps", "1000"},
      {"event-i", "--reps", "1000"},
      {"event-j", "--reps", "1000"},
      {"criterion", "--p", "0.001"},
      {"survival", "--reps", "50", "--cap", "100", "--t", "5"},
      {"lambda-c", "--reps", "100", "--cap", "50", "--t", "5", "--tol", "0.5", "--threshold", "0.1"},
      {"bound"},
  };
  for (const auto& args : cases) {
    CAPTURE(args.front());
    const auto r = run(args);
    CHECK(r.code == 0);
    CHECK(r.out.find("schema=") != std::string::npos);
  }
}
