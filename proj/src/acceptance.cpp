#include "cpstir/acceptance.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "cpstir/contact_process.hpp"
#include "cpstir/distributions.hpp"
#include "cpstir/exclusion_pair.hpp"
#include "cpstir/genealogy.hpp"
#include "cpstir/renewal.hpp"
#include "cpstir/report.hpp"
#include "cpstir/rng.hpp"

namespace cpstir::acceptance {

namespace {

// Tolerances.
constexpr double kExcursionRelTol = 0.01;
constexpr double kLocalAgreeRelTol = 0.03;
constexpr double kLocalBelowRelTol = 0.05;
constexpr double kRatioRelTol = 0.05;
constexpr double kSlopeRelTol = 0.15;
constexpr double kRenewalRelTol = 0.05;
constexpr double kBranchingRelTol = 0.02;
constexpr double kSigmas = 3.0;

// Replication budgets at scale 1.
constexpr std::uint64_t kExcursionReps = 1000000;
constexpr std::uint64_t kLocalD3Reps = 40000;
constexpr std::uint64_t kLocalD2Reps = 7000;
constexpr std::uint64_t kSlopeReps = 1000;
constexpr std::uint64_t kRenewalReps = 20000;
constexpr std::uint64_t kBoundPaths = 10000;
constexpr std::uint64_t kBranchingReps = 1000000;
constexpr std::uint64_t kCoupledRuns = 1000;
constexpr std::uint64_t kEventReps = 1000000;
constexpr std::uint64_t kRecursionReps = 100000;

std::uint64_t scaled(std::uint64_t n, const Options& o) {
  return std::max<std::uint64_t>(2, static_cast<std::uint64_t>(std::llround(static_cast<double>(n) * o.scale)));
}

std::string num(double v, int digits = 6) {
  std::ostringstream s;
  s.precision(digits);
  s << v;
  return s.str();
}

std::string pm(const EstimateReport& r) { return num(r.mean) + " +- " + num(r.std_error, 3); }

double combined(double a, double b) { return std::sqrt(a * a + b * b); }

SeededStream stream_for(const Options& o, int id) { return SeededStream(o.seed, "acceptance").child(id); }

Outcome excursion_constants(const Options& o) {
  const auto s = stream_for(o, 1);
  bool ok = true;
  std::string measured, target;
  for (int d : {2, 3}) {
    const double ux = 1.0 / (4.0 * d - 2.0);
    const double uy = (2.0 * d + 1.0) / (8.0 * d * d - 4.0 * d);
    const auto rx = excursion_mean(WalkKind::exclusion_difference, ExcursionTarget::u_x, d, scaled(kExcursionReps, o),
                                   s.child("x").child(d), o.workers);
    const auto ry = excursion_mean(WalkKind::free_difference, ExcursionTarget::u_y, d, scaled(kExcursionReps, o),
                                   s.child("y").child(d), o.workers);
    ok = ok && std::abs(rx.mean - ux) <= kExcursionRelTol * ux && std::abs(ry.mean - uy) <= kExcursionRelTol * uy;
    measured += "d=" + std::to_string(d) + " U_X " + pm(rx) + ", U_Y " + pm(ry) + "; ";
    target += "d=" + std::to_string(d) + " U_X " + num(ux) + ", U_Y " + num(uy) + "; ";
  }
  return {1, "excursion constants", ok, measured, target + "each within 1%", ""};
}

Outcome local_time_d3(const Options& o) {
  const auto s = stream_for(o, 2);
  const double limit = local_time_limit_d3();
  const double t = 1e4;
  const auto x = local_time_estimate(WalkKind::exclusion_difference, TrackedSet::neighbors, t, 3,
                                     scaled(kLocalD3Reps, o), s.child("x"), o.workers);
  const auto y = local_time_estimate(WalkKind::free_difference, TrackedSet::neighbors, t, 3, scaled(kLocalD3Reps, o),
                                     s.child("y"), o.workers);
  const bool agree = std::abs(x.mean - y.mean) <= kLocalAgreeRelTol * 0.5 * (x.mean + y.mean);
  auto below = [&](const EstimateReport& r) {
    return std::abs(r.mean - limit) <= kLocalBelowRelTol * limit && r.mean <= limit + kSigmas * r.std_error;
  };
  // Tail beyond t: P[Y_s in N_0] ~ 2d (8 pi s)^(-3/2) for the rate-12 walk.
  const double tail = 2.0 * 6.0 * std::pow(8.0 * std::numbers::pi, -1.5) / std::sqrt(t);
  return {2,
          "d=3 local time constant",
          agree && below(x) && below(y),
          "X " + pm(x) + ", Y " + pm(y),
          "(G-1)/2 = " + num(limit) + " (G = " + num(green_constant_d3(), 10) + "); agree within 3%, within 5% below",
          "truncation bias at t=1e4 about " + num(tail, 2)};
}

Outcome ratio_d2(const Options& o) {
  const auto s = stream_for(o, 3);
  const double t = 1e5;
  const auto x = local_time_estimate(WalkKind::exclusion_difference, TrackedSet::neighbors, t, 2,
                                     scaled(kLocalD2Reps, o), s.child("x"), o.workers);
  const auto y = local_time_estimate(WalkKind::free_difference, TrackedSet::closed_neighbors, t, 2,
                                     scaled(kLocalD2Reps, o), s.child("y"), o.workers);
  const double r = x.mean / y.mean;
  const double se = r * combined(x.std_error / x.mean, y.std_error / y.mean);
  return {3,
          "d=2 ratio X(N_0)/Y(closed N_0)",
          std::abs(r - 0.8) <= kRatioRelTol * 0.8,
          num(r) + " +- " + num(se, 3),
          "0.8 within 5%",
          "X " + pm(x) + ", Y " + pm(y)};
}

Outcome slope_d2(const Options& o) {
  const auto s = stream_for(o, 4);
  const double horizons[] = {1e3, 1e4, 1e5, 1e6};
  const auto r = local_time_log_slope(WalkKind::free_difference, TrackedSet::neighbors, horizons, 2,
                                      scaled(kSlopeReps, o), s, o.workers);
  const double target = 1.0 / (2.0 * std::numbers::pi);
  return {4,
          "d=2 log-slope of Y in N_0",
          std::abs(r.mean - target) <= kSlopeRelTol * target,
          pm(r),
          "1/(2 pi) = " + num(target) + " within 15%",
          "least-squares slope over t in {1e3,1e4,1e5,1e6}"};
}

Outcome renewal_ratios(const Options& o) {
  const auto s = stream_for(o, 5);
  const double t = 1e6;
  const RenewalSpec lemma1{DistributionSpec::deterministic(1), DistributionSpec::exponential(1),
                           DistributionSpec::pareto(0.5, 1)};
  const RenewalSpec lemma2{DistributionSpec::deterministic(2), DistributionSpec::deterministic(1),
                           DistributionSpec::pareto(0.5, 1)};
  const auto r1 = kappa_ratio(lemma1, t, scaled(kRenewalReps, o), s.child("one"), o.workers);
  const auto r2 = kappa_ratio(lemma2, t, scaled(kRenewalReps, o), s.child("two"), o.workers);
  const bool ok = std::abs(r1.mean - 1.0) <= kRenewalRelTol && std::abs(r2.mean - 2.0) <= kRenewalRelTol * 2.0;
  return {5, "renewal ratio limits", ok, "(det1,exp1) " + pm(r1) + "; (det2,det1) " + pm(r2),
          "1 and 2, each within 5%", "t=1e6, V pareto(1/2,1)"};
}

Outcome kappa_bound(const Options& o) {
  const auto s = stream_for(o, 6);
  const RenewalSpec spec{DistributionSpec::deterministic(1), DistributionSpec::exponential(1),
                         DistributionSpec::pareto(0.5, 1)};
  const auto r = kappa_difference_bound_check(spec, 1e3, scaled(kBoundPaths, o), s, o.workers);
  return {6,
          "kappa difference bound",
          r.violations == 0 && r.paths > 0,
          std::to_string(r.violations) + " violations in " + std::to_string(r.paths) + " paths",
          "0 violations",
          "smallest slack " + num(r.min_slack)};
}

Outcome branching_mean(const Options& o) {
  const auto s = stream_for(o, 7);
  bool ok = true;
  std::string measured, target;
  for (double lambda : {1.2, 0.8}) {
    const auto r = psi_mean(lambda, 5.0, scaled(kBranchingReps, o), s.child(lambda > 1 ? "super" : "sub"), o.workers);
    const double want = std::exp((lambda - 1.0) * 5.0);
    ok = ok && std::abs(r.mean - want) <= kBranchingRelTol * want && r.extra_value("truncated").value_or(0) == 0;
    measured += "lambda=" + num(lambda) + " " + pm(r) + "; ";
    target += "lambda=" + num(lambda) + " " + num(want) + "; ";
  }
  return {7, "branching mean", ok, measured, target + "each within 2%", ""};
}

Outcome coupling_invariants(const Options& o) {
  const auto s = stream_for(o, 8);
  bool ok = true;
  std::string measured, detail;
  for (auto [lambda, n] : {std::pair{1.5, 10.0}, std::pair{1.2, 100.0}}) {
    CoupledOptions opt;
    opt.lambda = lambda;
    opt.n_rate = n;
    opt.dim = 2;
    opt.audit = AuditLevel::every_event;
    const auto c = coupled_summary(opt, 5.0, scaled(kCoupledRuns, o), s.child(static_cast<std::uint64_t>(n)),
                                   o.workers);
    ok = ok && c.violations == 0 && c.truncated == 0;
    measured += "(" + num(lambda) + "," + num(n) + ") " + std::to_string(c.violations) + " violations in " +
                std::to_string(c.runs) + " runs; ";
    detail += "(" + num(lambda) + "," + num(n) + ") mean Psi " + num(c.psi.mean()) + ", Xi " + num(c.xi.mean()) +
              ", Xi<Psi in " + std::to_string(c.strict_runs) + " runs; ";
    if (!c.first_violation.empty()) detail += c.first_violation + "; ";
  }
  return {8, "coupling invariants", ok, measured, "0 violations, horizon 5, audit at every event", detail};
}

Outcome event_e(const Options& o) {
  const auto s = stream_for(o, 9);
  const auto r = estimate_event_E(1.0, 100.0, scaled(kEventReps, o), s, o.workers);
  const double want = event_E_probability(1.0, 100.0);
  return {9, "event E closed form", std::abs(r.mean - want) <= kSigmas * r.std_error, pm(r),
          num(want) + " within 3 std errors", "lambda=1, N=100, t*=" + num(star_time(100.0))};
}

Outcome ij_symmetry(const Options& o) {
  const auto s = stream_for(o, 10);
  const auto i = estimate_I_prob(1.0, 100.0, 2, scaled(kEventReps, o), s.child("I"), o.workers);
  const auto j = estimate_J_prob(1.0, 100.0, 2, scaled(kEventReps, o), s.child("J"), o.workers);
  const double gap = std::abs(i.probability.mean - j.probability.mean);
  const double tol = kSigmas * combined(i.probability.std_error, j.probability.std_error);
  const bool ok = gap <= tol && i.audit_violations == 0 && j.audit_violations == 0;
  return {10,
          "I/J symmetry and occurrence audit",
          ok,
          "I " + pm(i.probability) + ", J " + pm(j.probability) + "; audit violations " +
              std::to_string(i.audit_violations + j.audit_violations),
          "|I-J| <= 3 combined std errors (" + num(tol, 3) + "); 0 violations",
          std::to_string(i.occurrences) + " I and " + std::to_string(j.occurrences) +
              " J occurrences audited; lambda=1, N=100, d=2"};
}

Outcome key_recursion(const Options& o) {
  const auto s = stream_for(o, 11);
  const double lambda = 1.0, n = 100.0;
  const auto pi = estimate_I_prob(lambda, n, 2, scaled(kEventReps, o), s.child("I"), o.workers);
  const auto crit = extinction_criterion(lambda, n, pi.probability);
  CoupledOptions opt;
  opt.lambda = lambda;
  opt.n_rate = n;
  opt.dim = 2;
  opt.audit = AuditLevel::genealogical;
  const auto rec = key_estimate_recursion(opt, 5, scaled(kRecursionReps, o), s.child("recursion"), o.workers);
  const double bound = std::exp(star_time(n) * (lambda - 1.0)) - 2.0 * pi.probability.mean;
  bool ok = crit.verdict == CriterionVerdict::extinct_guaranteed;
  std::string measured;
  for (const auto& r : rec.ratio) {
    const double slack = kSigmas * combined(r.std_error, 2.0 * pi.probability.std_error);
    ok = ok && r.mean <= bound + slack;
    measured += num(r.mean, 5) + " ";
  }
  return {11,
          "key-estimate recursion",
          ok,
          "ratios k=0..5: " + measured,
          "<= exp(t*(lambda-1)) - 2P[I] = " + num(bound, 8) + " + 3 combined std errors",
          "lambda=1, N=100, d=2; P[I] " + pm(pi.probability) + "; criterion " + std::string(to_string(crit.verdict)) +
              " (growth factor " + num(crit.growth_factor, 10) + ")"};
}

Outcome lambda_c_substitutes(const Options& o) {
  const auto s = stream_for(o, 12);
  std::vector<LambdaCInterval> found;
  std::string measured;
  for (double n : {0.0, 5.0, 20.0}) {
    LambdaCSearch q;
    q.dim = 2;
    q.n_rate = n;
    q.horizon = 50.0;
    q.cap = 500;
    q.threshold = 0.02;
    q.tol = 0.02;
    q.lower = 0.8;
    q.upper = 2.5;
    q.reps_per_probe = scaled(2000, o);
    q.batch = std::min<std::uint64_t>(200, q.reps_per_probe);
    found.push_back(estimate_lambda_c(q, s, o.workers));
    measured += "N=" + num(n) + " [" + num(found.back().lower, 5) + "," + num(found.back().upper, 5) + "] ";
  }
  const bool window = found[0].lower >= 4.0 / 3.0 && found[0].upper <= 2.0;
  const bool monotone = found[1].upper < found[0].lower && found[2].upper < found[1].lower;
  return {12,
          "lambda_c substitutes",
          window && monotone,
          measured,
          "N=0 inside [4/3, 2]; proxy decreasing over N in {0,5,20}",
          "the N -> infinity limits of lambda_c are not desk-reproducible; the proxy is survival to T=50 "
          "or 500 particles with frequency >= 0.02, and criterion 11 covers the extinction side"};
}

}  // namespace

std::vector<int> suite_criteria(std::string_view suite) {
  if (suite == "constants") return {1, 2, 3, 4};
  if (suite == "renewal") return {5, 6};
  if (suite == "coupling") return {7, 8};
  if (suite == "criterion") return {9, 10, 11, 12};
  if (suite == "all") return {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12};
  throw std::invalid_argument("unknown suite '" + std::string(suite) +
                              "' (expected constants, renewal, coupling, criterion or all)");
}

Outcome run_criterion(int id, const Options& options) {
  if (!(options.scale > 0.0)) throw std::invalid_argument("scale must be positive");
  switch (id) {
    case 1:
      return excursion_constants(options);
    case 2:
      return local_time_d3(options);
    case 3:
      return ratio_d2(options);
    case 4:
      return slope_d2(options);
    case 5:
      return renewal_ratios(options);
    case 6:
      return kappa_bound(options);
    case 7:
      return branching_mean(options);
    case 8:
      return coupling_invariants(options);
    case 9:
      return event_e(options);
    case 10:
      return ij_symmetry(options);
    case 11:
      return key_recursion(options);
    case 12:
      return lambda_c_substitutes(options);
    default:
      throw std::invalid_argument("criterion id must be in 1..12");
  }
}

std::vector<Outcome> run_suite(std::string_view suite, const Options& options) {
  std::vector<Outcome> out;
  for (int id : suite_criteria(suite)) out.push_back(run_criterion(id, options));
  return out;
}

std::string format_outcome(const Outcome& o) {
  auto trim = [](std::string text) {
    while (!text.empty() && (text.back() == ' ' || text.back() == ';')) text.pop_back();
    return text;
  };
  std::ostringstream s;
  s << "AC" << (o.id < 10 ? "0" : "") << o.id << (o.passed ? " PASS " : " FAIL ") << o.name << ": measured "
    << trim(o.measured) << "; target " << trim(o.target);
  if (const auto detail = trim(o.detail); !detail.empty()) s << "; " << detail;
  return s.str();
}

}  // namespace cpstir::acceptance
