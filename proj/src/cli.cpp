#include "cpstir/cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <stdexcept>

#include <CLI11.hpp>

#include "cpstir/acceptance.hpp"
#include "cpstir/contact_process.hpp"
#include "cpstir/distributions.hpp"
#include "cpstir/exclusion_pair.hpp"
#include "cpstir/genealogy.hpp"
#include "cpstir/renewal.hpp"
#include "cpstir/report.hpp"
#include "cpstir/rng.hpp"

namespace cpstir::cli {
namespace {

struct Params {
  std::uint64_t seed = 20240601;
  std::uint64_t reps = 0;
  unsigned workers = 1;
  std::string out = "-";
  std::string format = "csv";

  int dim = 2;
  std::string kind = "X";
  std::string target = "exit";
  std::string set = "N0";
  std::vector<double> horizons;
  double horizon = 0.0;
  bool slope = false;

  int order = 64;
  std::uint64_t steps = 10000;

  std::string u1 = "det:1";
  std::string u2 = "exp:1";
  std::string v = "pareto:0.5,1";
  bool independent_v = false;
  std::uint64_t k = 100;

  double lambda = 1.0;
  double n_rate = 100.0;
  std::vector<double> n_rates;
  std::size_t cap = 100000;
  std::string audit = "every_event";
  bool events = false;
  double p_lower = -1.0;
  int k_max = 0;
  std::uint64_t recursion_reps = 100000;

  double threshold = 0.02;
  double tol = 0.02;
  double lower = 0.8;
  double upper = 2.5;
  std::uint64_t batch = 200;

  std::string suite = "all";
  double scale = 1.0;
};

struct Result {
  Table table;
  std::string summary;
  int code = kOk;
};

class ConfigError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

const std::vector<std::string> kKinds{"X", "Y"};
const std::vector<std::string> kTargets{"exit", "n0", "origin"};
const std::vector<std::string> kSets{"N0", "closedN0"};
const std::vector<std::string> kAudits{"none", "genealogical", "every_event"};

WalkKind walk_kind(const Params& p) {
  return p.kind == "X" ? WalkKind::exclusion_difference : WalkKind::free_difference;
}

TrackedSet tracked_set(const Params& p) { return p.set == "N0" ? TrackedSet::neighbors : TrackedSet::closed_neighbors; }

AuditLevel audit_level(const Params& p) {
  if (p.audit == "none") return AuditLevel::none;
  if (p.audit == "genealogical") return AuditLevel::genealogical;
  return AuditLevel::every_event;
}

RenewalSpec renewal_spec(const Params& p) {
  return {DistributionSpec::parse(p.u1), DistributionSpec::parse(p.u2), DistributionSpec::parse(p.v)};
}

SeededStream stream(const Params& p, std::string_view subcommand) { return SeededStream(p.seed, subcommand); }

std::string estimate_text(const EstimateReport& r) {
  return format_double(r.mean) + " +- " + format_double(r.std_error) + " (n=" + std::to_string(r.n_reps) + ")";
}

std::int64_t as_int(std::uint64_t v) { return static_cast<std::int64_t>(v); }

int truncation_code(std::uint64_t truncated, std::uint64_t total, std::ostream& diag) {
  if (truncated == 0) return kOk;
  diag << "warning: " << truncated << " of " << total << " replications truncated\n";
  return static_cast<double>(truncated) > kTruncationDominatedFraction * static_cast<double>(total)
             ? kTruncationDominated
             : kOk;
}

void print_notes(const EstimateReport& r, std::ostream& diag) {
  for (const auto& n : r.notes) diag << "note: " << n << '\n';
}


Result excursion_mean_cmd(const Params& p, std::ostream& diag) {
  ExcursionTarget target = ExcursionTarget::u_x;
  if (p.kind == "Y") {
    target = p.target == "n0" ? ExcursionTarget::u_y_n0
             : p.target == "origin" ? ExcursionTarget::u_y_0
                                    : ExcursionTarget::u_y;
  } else if (p.target != "exit") {
    throw ConfigError("--target n0 and origin apply to --kind Y only");
  }
  const auto r = excursion_mean(walk_kind(p), target, p.dim, p.reps, stream(p, "excursion-mean"),
                                p.workers);
  print_notes(r, diag);
  Result out{{"excursion-mean", {"kind", "target", "d", "n_reps", "mean", "std_error"}, {}}, "", kOk};
  out.table.add({p.kind, p.target, std::int64_t{p.dim}, as_int(r.n_reps), r.mean, r.std_error});
  out.summary = "excursion-mean " + p.kind + " d=" + std::to_string(p.dim) + ": " + estimate_text(r);
  return out;
}

Result local_time_cmd(const Params& p, std::ostream& diag) {
  const auto& horizons = p.horizons;
  const auto s = stream(p, "local-time");
  const auto reps = p.reps;
  if (p.slope) {
    const auto r = local_time_log_slope(walk_kind(p), tracked_set(p), horizons, p.dim, reps, s, p.workers);
    print_notes(r, diag);
    Result out{{"local-time-slope", {"kind", "set", "d", "first_horizon", "last_horizon", "n_reps", "slope",
                                     "std_error"}, {}}, "", kOk};
    out.table.add({p.kind, p.set, std::int64_t{p.dim}, horizons.front(), horizons.back(), as_int(r.n_reps), r.mean,
                   r.std_error});
    out.summary = "local-time slope " + p.kind + " in " + p.set + ": " + estimate_text(r);
    return out;
  }
  const auto series = local_time_series(walk_kind(p), tracked_set(p), horizons, p.dim, reps, s, p.workers);
  Result out{{"local-time", {"kind", "set", "d", "horizon", "n_reps", "mean", "std_error"}, {}}, "", kOk};
  for (std::size_t i = 0; i < series.size(); ++i) {
    out.table.add({p.kind, p.set, std::int64_t{p.dim}, horizons[i], as_int(series[i].n_reps), series[i].mean,
                   series[i].std_error});
  }
  out.summary = "local-time " + p.kind + " in " + p.set + " at t=" + format_double(horizons.back()) + ": " +
                estimate_text(series.back());
  return out;
}

Result green_constant_cmd(const Params& p, std::ostream&) {
  Result out{{"green-constant", {"method", "value", "std_error", "n_reps"}, {}}, "", kOk};
  const double g = green_origin_d3_quadrature(p.order);
  out.table.add({std::string("quadrature"), g, 0.0, std::int64_t{0}});
  out.summary = "G(0,0) d=3 quadrature " + format_double(g);
  if (p.reps > 0) {
    const auto w = green_origin_d3_walk(p.steps, p.reps, stream(p, "green-constant"), p.workers);
    out.table.add({std::string("walk"), w.mean, w.std_error, as_int(w.n_reps)});
    out.summary += ", walk " + estimate_text(w);
  }
  out.table.add({std::string("local_time_limit"), (g - 1.0) / 2.0, 0.0, std::int64_t{0}});
  return out;
}

Result renewal_ratio_cmd(const Params& p, std::ostream& diag) {
  const auto spec = renewal_spec(p);
  const double t = p.horizon;
  PairOptions po;
  po.v_coupling = p.independent_v ? VCoupling::independent : VCoupling::shared;
  const auto r = kappa_ratio(spec, t, p.reps, stream(p, "renewal-ratio"), p.workers, po);
  print_notes(r, diag);
  Result out{{"renewal-ratio", {"u1", "u2", "v", "v_coupling", "horizon", "n_reps", "ratio", "std_error",
                                "mean_kappa1", "mean_kappa2"}, {}}, "", kOk};
  out.table.add({p.u1, p.u2, p.v, std::string(p.independent_v ? "independent" : "shared"), t, as_int(r.n_reps),
                 r.mean, r.std_error, r.extra_value("mean_numerator").value_or(NAN),
                 r.extra_value("mean_denominator").value_or(NAN)});
  out.summary = "renewal-ratio " + spec.describe() + ": " + estimate_text(r);
  return out;
}

Result delta_max_cmd(const Params& p, std::ostream& diag) {
  const auto r = delta_max_statistic(DistributionSpec::parse(p.u2), p.k, p.reps, stream(p, "delta-max"),
                                     p.workers);
  print_notes(r, diag);
  Result out{{"delta-max", {"u2", "k", "n_reps", "mean", "std_error"}, {}}, "", kOk};
  out.table.add({p.u2, as_int(p.k), as_int(r.n_reps), r.mean, r.std_error});
  out.summary = "delta-max k=" + std::to_string(p.k) + ": " + estimate_text(r);
  return out;
}

Result nt_sublinearity_cmd(const Params& p, std::ostream&) {
  const auto& horizons = p.horizons;
  const auto series =
      n_t_sublinearity(renewal_spec(p), horizons, p.reps, stream(p, "nt-sublinearity"), p.workers);
  Result out{{"nt-sublinearity", {"u1", "v", "horizon", "n_reps", "mean_nt_over_t", "std_error"}, {}}, "", kOk};
  for (std::size_t i = 0; i < series.size(); ++i) {
    out.table.add({p.u1, p.v, horizons[i], as_int(series[i].n_reps), series[i].mean, series[i].std_error});
  }
  out.summary = "nt-sublinearity at t=" + format_double(horizons.back()) + ": " + estimate_text(series.back());
  return out;
}

Result kappa_bound_cmd(const Params& p, std::ostream&) {
  const double t = p.horizon;
  const auto r = kappa_difference_bound_check(renewal_spec(p), t, p.reps, stream(p, "kappa-bound"),
                                              p.workers);
  Result out{{"kappa-bound", {"u1", "u2", "v", "horizon", "paths", "violations", "min_slack"}, {}}, "", kOk};
  out.table.add({p.u1, p.u2, p.v, t, as_int(r.paths), as_int(r.violations), r.min_slack});
  out.summary = "kappa-bound: " + std::to_string(r.violations) + " violations in " + std::to_string(r.paths) +
                " paths, min slack " + format_double(r.min_slack);
  if (r.violations > 0) out.code = kInvariantBreach;
  return out;
}

Result psi_mean_cmd(const Params& p, std::ostream& diag) {
  const double t = p.horizon;
  const auto reps = p.reps;
  const auto r = psi_mean(p.lambda, t, reps, stream(p, "psi-mean"), p.workers, p.cap);
  const auto truncated = static_cast<std::uint64_t>(r.extra_value("truncated").value_or(0));
  Result out{{"psi-mean", {"lambda", "horizon", "n_reps", "mean", "std_error", "target", "truncated"}, {}}, "", kOk};
  out.table.add({p.lambda, t, as_int(r.n_reps), r.mean, r.std_error, std::exp((p.lambda - 1.0) * t),
                 as_int(truncated)});
  out.summary = "psi-mean lambda=" + format_double(p.lambda) + " t=" + format_double(t) + ": " + estimate_text(r);
  out.code = truncation_code(truncated, reps, diag);
  return out;
}

CoupledOptions coupled_options(const Params& p) {
  CoupledOptions o;
  o.lambda = p.lambda;
  o.n_rate = p.n_rate;
  o.dim = p.dim;
  o.population_cap = p.cap;
  o.audit = audit_level(p);
  return o;
}

Result coupled_run_cmd(const Params& p, std::ostream& diag) {
  const double t = p.horizon;
  auto o = coupled_options(p);
  if (p.events) {
    o.record_events = true;
    const double checkpoints[] = {t};
    const auto traj = evolve_coupled(o, checkpoints, stream(p, "coupled-run").child(std::uint64_t{0}));
    Result out{{"coupled-events", {"time", "kind", "address", "site"}, {}}, "", kOk};
    for (const auto& e : traj.events) {
      out.table.add({e.time, std::string(to_string(e.kind)), e.address, e.site});
    }
    const auto& c = traj.checkpoints.back();
    out.summary = "coupled-run events: " + std::to_string(traj.events.size()) + ", Psi " +
                  std::to_string(c.psi_present) + ", Xi " + std::to_string(c.xi_present) + " at t=" + format_double(t);
    if (traj.truncated) out.code = kTruncationDominated;
    return out;
  }
  const auto reps = p.reps;
  const auto c = coupled_summary(o, t, reps, stream(p, "coupled-run"), p.workers);
  Result out{{"coupled-run", {"lambda", "N", "d", "horizon", "audit", "runs", "violations", "truncated",
                              "strict_runs", "mean_psi", "se_psi", "mean_xi", "se_xi"}, {}}, "", kOk};
  out.table.add({p.lambda, p.n_rate, std::int64_t{p.dim}, t, p.audit, as_int(c.runs), as_int(c.violations),
                 as_int(c.truncated), as_int(c.strict_runs), c.psi.mean(), c.psi.std_error(), c.xi.mean(),
                 c.xi.std_error()});
  out.summary = "coupled-run: " + std::to_string(c.violations) + " violations in " + std::to_string(c.runs) +
                " runs, mean Psi " + format_double(c.psi.mean()) + ", mean Xi " + format_double(c.xi.mean());
  if (!c.first_violation.empty()) diag << "first violation: " << c.first_violation << '\n';
  out.code = c.violations > 0 ? kInvariantBreach : truncation_code(c.truncated, c.runs, diag);
  return out;
}

Result event_e_cmd(const Params& p, std::ostream&) {
  const auto r = estimate_event_E(p.lambda, p.n_rate, p.reps, stream(p, "event-e"), p.workers);
  const double exact = event_E_probability(p.lambda, p.n_rate);
  Result out{{"event-e", {"lambda", "N", "n_reps", "frequency", "std_error", "closed_form"}, {}}, "", kOk};
  out.table.add({p.lambda, p.n_rate, as_int(r.n_reps), r.mean, r.std_error, exact});
  out.summary = "event-e: " + estimate_text(r) + ", closed form " + format_double(exact);
  return out;
}

Result event_ij_cmd(const Params& p, bool is_i, std::ostream&) {
  const char* name = is_i ? "event-i" : "event-j";
  const auto reps = p.reps;
  const auto e = is_i ? estimate_I_prob(p.lambda, p.n_rate, p.dim, reps, stream(p, name), p.workers)
                      : estimate_J_prob(p.lambda, p.n_rate, p.dim, reps, stream(p, name), p.workers);
  Result out{{name, {"lambda", "N", "d", "n_reps", "probability", "std_error", "pattern_frequency",
                     "pattern_std_error", "occurrences", "audit_violations"}, {}}, "", kOk};
  out.table.add({p.lambda, p.n_rate, std::int64_t{p.dim}, as_int(e.probability.n_reps), e.probability.mean,
                 e.probability.std_error, e.pattern.mean, e.pattern.std_error, as_int(e.occurrences),
                 as_int(e.audit_violations)});
  out.summary = std::string(name) + ": " + estimate_text(e.probability) + ", " + std::to_string(e.occurrences) +
                " occurrences, " + std::to_string(e.audit_violations) + " audit violations";
  if (e.audit_violations > 0) out.code = kInvariantBreach;
  return out;
}

Result criterion_cmd(const Params& p, std::ostream& diag) {
  Result out{{"criterion", {"quantity", "k", "value", "std_error"}, {}}, "", kOk};
  CriterionResult c{};
  double p_se = 0.0;
  if (p.p_lower >= 0.0) {
    c = extinction_criterion(p.lambda, p.n_rate, p.p_lower);
  } else {
    const auto e = estimate_I_prob(p.lambda, p.n_rate, p.dim, p.reps, stream(p, "criterion").child("I"),
                                   p.workers);
    out.table.add({std::string("p_I"), std::int64_t{-1}, e.probability.mean, e.probability.std_error});
    p_se = e.probability.std_error;
    c = extinction_criterion(p.lambda, p.n_rate, e.probability);
    if (e.audit_violations > 0) out.code = kInvariantBreach;
  }
  out.table.add({std::string("p_used"), std::int64_t{-1}, c.p_used, p_se});
  out.table.add({std::string("growth_factor"), std::int64_t{-1}, c.growth_factor, 2.0 * p_se});
  out.table.add({std::string("verdict"), std::int64_t{-1}, std::string(to_string(c.verdict)), 0.0});
  out.summary = "criterion lambda=" + format_double(p.lambda) + " N=" + format_double(p.n_rate) + ": " +
                std::string(to_string(c.verdict)) + " (growth factor " + format_double(c.growth_factor) + ")";
  if (p.k_max > 0) {
    auto o = coupled_options(p);
    o.audit = audit_level(p) == AuditLevel::every_event ? AuditLevel::genealogical : audit_level(p);
    const auto rec =
        key_estimate_recursion(o, p.k_max, p.recursion_reps, stream(p, "criterion").child("recursion"), p.workers);
    for (std::size_t k = 0; k < rec.xi_mean.size(); ++k) {
      out.table.add({std::string("xi_mean"), static_cast<std::int64_t>(k), rec.xi_mean[k].mean,
                     rec.xi_mean[k].std_error});
    }
    for (std::size_t k = 0; k < rec.ratio.size(); ++k) {
      out.table.add({std::string("ratio"), static_cast<std::int64_t>(k), rec.ratio[k].mean, rec.ratio[k].std_error});
    }
    if (out.code == kOk) out.code = truncation_code(rec.truncated, p.recursion_reps, diag);
  }
  return out;
}

Result survival_cmd(const Params& p, std::ostream&) {
  ContactOptions o;
  o.lambda = p.lambda;
  o.n_rate = p.n_rate;
  o.dim = p.dim;
  const double t = p.horizon;
  const auto r = survival_probability(o, t, p.cap, p.reps, stream(p, "survival"), p.workers);
  Result out{{"survival", {"lambda", "N", "d", "horizon", "cap", "n_reps", "survival", "std_error",
                           "alive_at_horizon", "hit_cap"}, {}}, "", kOk};
  out.table.add({p.lambda, p.n_rate, std::int64_t{p.dim}, t, as_int(p.cap), as_int(r.n_reps), r.mean, r.std_error,
                 r.extra_value("alive_at_horizon").value_or(NAN), r.extra_value("hit_cap").value_or(NAN)});
  out.summary = "survival lambda=" + format_double(p.lambda) + " N=" + format_double(p.n_rate) + ": " +
                estimate_text(r);
  return out;
}

Result lambda_c_cmd(const Params& p, std::ostream& diag) {
  LambdaCSearch q;
  q.dim = p.dim;
  q.n_rate = p.n_rate;
  q.horizon = p.horizon;
  q.cap = p.cap;
  q.threshold = p.threshold;
  q.tol = p.tol;
  q.lower = p.lower;
  q.upper = p.upper;
  q.reps_per_probe = p.reps;
  q.batch = std::min(p.batch, q.reps_per_probe);
  const auto iv = estimate_lambda_c(q, stream(p, "lambda-c"), p.workers);
  if (!iv.note.empty()) diag << "note: " << iv.note << '\n';
  Result out{{"lambda-c", {"row", "lambda", "survival", "std_error", "n_reps", "above"}, {}}, "", kOk};
  for (const auto& pr : iv.probes) {
    out.table.add({std::string("probe"), pr.lambda, pr.survival, pr.std_error, as_int(pr.n_reps),
                   std::int64_t{pr.above ? 1 : 0}});
  }
  out.table.add({std::string("lower"), iv.lower, NAN, NAN, std::int64_t{0}, std::int64_t{0}});
  out.table.add({std::string("upper"), iv.upper, NAN, NAN, std::int64_t{0}, std::int64_t{1}});
  out.summary = "lambda-c proxy N=" + format_double(p.n_rate) + ": [" + format_double(iv.lower) + ", " +
                format_double(iv.upper) + "] after " + std::to_string(iv.probes.size()) + " probes";
  return out;
}

Result bound_cmd(const Params& p, std::ostream&) {
  const auto& ns = p.n_rates;
  Result out{{"bound", {"d", "N", "lower_bound"}, {}}, "", kOk};
  for (double n : ns) out.table.add({std::int64_t{p.dim}, n, asymptotic_lower_bound(p.dim, n)});
  out.summary = "bound d=" + std::to_string(p.dim) + " N=" + format_double(ns.back()) + ": " +
                format_double(asymptotic_lower_bound(p.dim, ns.back()));
  return out;
}

Result suite_cmd(const Params& p, std::ostream& diag) {
  acceptance::Options o;
  o.scale = p.scale;
  o.workers = p.workers;
  o.seed = p.seed;
  Result out{{"suite", {"id", "name", "passed", "measured", "target", "detail"}, {}}, "", kOk};
  int failed = 0;
  const auto ids = acceptance::suite_criteria(p.suite);
  for (int id : ids) {
    const auto r = acceptance::run_criterion(id, o);
    diag << acceptance::format_outcome(r) << '\n';
    out.table.add({std::int64_t{r.id}, r.name, std::int64_t{r.passed ? 1 : 0}, r.measured, r.target, r.detail});
    if (!r.passed) ++failed;
  }
  out.summary = "suite " + p.suite + ": " + std::to_string(ids.size() - failed) + "/" + std::to_string(ids.size()) +
                " passed";
  if (failed > 0) out.code = kInvariantBreach;
  return out;
}

using Handler = std::function<Result(const Params&, std::ostream&)>;

void add_common(CLI::App* sub, Params& p, std::uint64_t default_reps) {
  sub->add_option("--seed", p.seed, "master seed")->capture_default_str();
  if (default_reps > 0) {
    sub->add_option("--reps", p.reps, "replications")->capture_default_str()->check(CLI::Range(std::uint64_t{2}, UINT64_MAX));
  }
  sub->add_option("--workers", p.workers, "worker threads; results do not depend on it")
      ->capture_default_str()
      ->check(CLI::Range(1u, 1024u));
  sub->add_option("--out", p.out, "output path, - for stdout")->capture_default_str();
  sub->add_option("--format", p.format, "output format")->capture_default_str()->check(CLI::IsMember({"csv", "json"}));
}

void add_dim(CLI::App* sub, Params& p, int lo = 1) {
  sub->add_option("--d", p.dim, "lattice dimension")->capture_default_str()->check(CLI::Range(lo, 3));
}

void add_renewal(CLI::App* sub, Params& p) {
  sub->add_option("--u1", p.u1, "U^(1) law: det:A, exp:RATE, pareto:SHAPE,SCALE, two:V1,P,V2")->capture_default_str();
  sub->add_option("--u2", p.u2, "U^(2) law")->capture_default_str();
  sub->add_option("--v", p.v, "V law")->capture_default_str();
}

void add_rates(CLI::App* sub, Params& p) {
  sub->add_option("--lambda", p.lambda, "birth rate")->capture_default_str()->check(CLI::NonNegativeNumber);
  sub->add_option("--N", p.n_rate, "stirring rate")->capture_default_str()->check(CLI::NonNegativeNumber);
}

struct Command {
  CLI::App* app;
  Handler handler;
  std::unique_ptr<Params> params;
};

// Each subcommand binds its own Params, so its defaults are explicit in a
// dumped configuration.
std::vector<Command> build(CLI::App& app) {
  std::vector<Command> cmds;
  auto add = [&](const std::string& name, const std::string& help, std::uint64_t reps, Handler h) {
    auto* sub = app.add_subcommand(name, help);
    sub->configurable();
    auto params = std::make_unique<Params>();
    params->reps = reps;
    add_common(sub, *params, reps);
    Params& p = *params;
    cmds.push_back({sub, std::move(h), std::move(params)});
    return std::pair<CLI::App*, Params&>{sub, p};
  };

  {
    auto [sub, p] = add("excursion-mean", "mean excursion times U_X, U_Y", 1000000, excursion_mean_cmd);
    sub->add_option("--kind", p.kind, "X (exclusion difference) or Y (free walk)")
        ->capture_default_str()
        ->check(CLI::IsMember(kKinds));
    sub->add_option("--target", p.target, "exit, or for Y: n0, origin")
        ->capture_default_str()
        ->check(CLI::IsMember(kTargets));
    add_dim(sub, p, 2);
  }
  {
    auto [sub, p] = add("local-time", "expected occupation time of N_0 or the closed N_0", 10000, local_time_cmd);
    p.horizons = {1e4};
    sub->add_option("--kind", p.kind, "X or Y")->capture_default_str()->check(CLI::IsMember(kKinds));
    sub->add_option("--set", p.set, "N0 or closedN0")->capture_default_str()->check(CLI::IsMember(kSets));
    sub->add_option("--t", p.horizons, "horizons")->capture_default_str()->check(CLI::PositiveNumber);
    sub->add_flag("--slope", p.slope, "fit the slope against log t");
    add_dim(sub, p, 2);
  }
  {
    auto [sub, p] = add("green-constant", "G(0,0) of the walk on Z^3; --reps > 0 adds a walk simulation", 0,
                        green_constant_cmd);
    sub->add_option("--order", p.order, "quadrature order")->capture_default_str()->check(CLI::Range(2, 4096));
    sub->add_option("--reps", p.reps, "walk replications (0 skips the walk)")->capture_default_str();
    sub->add_option("--steps", p.steps, "steps per walk")->capture_default_str()->check(CLI::Range(2, 100000000));
  }
  {
    auto [sub, p] = add("renewal-ratio", "E[kappa1_t] / E[kappa2_t] with a shared V sequence", 200,
                        renewal_ratio_cmd);
    p.horizon = 1e6;
    add_renewal(sub, p);
    sub->add_option("--t", p.horizon, "horizon")->capture_default_str()->check(CLI::PositiveNumber);
    sub->add_flag("--independent-v", p.independent_v, "give each path its own V sequence");
  }
  {
    auto [sub, p] = add("delta-max", "E[max_{m<=k} Delta_m] with U^(1) = 1", 10000, delta_max_cmd);
    sub->add_option("--u2", p.u2, "U^(2) law, mean 1")->capture_default_str();
    sub->add_option("--k", p.k, "largest block index")->capture_default_str();
  }
  {
    auto [sub, p] = add("nt-sublinearity", "E[N_t] / t of path 1", 1000, nt_sublinearity_cmd);
    p.horizons = {1e2, 1e3, 1e4, 1e5};
    add_renewal(sub, p);
    sub->add_option("--t", p.horizons, "horizons")->capture_default_str()->check(CLI::PositiveNumber);
  }
  {
    auto [sub, p] = add("kappa-bound", "path-wise check of |kappa2 - kappa1| <= max Delta_m", 10000,
                        kappa_bound_cmd);
    p.horizon = 1e3;
    add_renewal(sub, p);
    sub->add_option("--t", p.horizon, "horizon")->capture_default_str()->check(CLI::PositiveNumber);
  }
  {
    auto [sub, p] = add("psi-mean", "E[#Psi present at t]", 100000, psi_mean_cmd);
    p.lambda = 1.2;
    p.horizon = 5.0;
    sub->add_option("--lambda", p.lambda, "birth rate")->capture_default_str()->check(CLI::NonNegativeNumber);
    sub->add_option("--t", p.horizon, "horizon")->capture_default_str()->check(CLI::PositiveNumber);
    sub->add_option("--cap", p.cap, "population cap")->capture_default_str();
  }
  {
    auto [sub, p] = add("coupled-run", "coupled Psi/Xi runs with invariant audits", 1000, coupled_run_cmd);
    p.lambda = 1.5;
    p.n_rate = 10.0;
    p.horizon = 5.0;
    add_rates(sub, p);
    add_dim(sub, p);
    sub->add_option("--t", p.horizon, "horizon")->capture_default_str()->check(CLI::PositiveNumber);
    sub->add_option("--cap", p.cap, "population cap")->capture_default_str();
    sub->add_option("--audit", p.audit, "none, genealogical or every_event")
        ->capture_default_str()
        ->check(CLI::IsMember(kAudits));
    sub->add_flag("--events", p.events, "write the event log of replication 0 instead of the summary");
  }
  {
    auto [sub, p] = add("event-e", "frequency of the clock pattern E", 1000000, event_e_cmd);
    add_rates(sub, p);
  }
  {
    auto [sub, p] = add("event-i", "P[I(o,0)]", 1000000,
                        [](const Params& q, std::ostream& d) { return event_ij_cmd(q, true, d); });
    add_rates(sub, p);
    add_dim(sub, p);
  }
  {
    auto [sub, p] = add("event-j", "P[J(o,0)]", 1000000,
                        [](const Params& q, std::ostream& d) { return event_ij_cmd(q, false, d); });
    add_rates(sub, p);
    add_dim(sub, p);
  }
  {
    auto [sub, p] = add("criterion", "extinction criterion from P[I]; --k-max adds the key-estimate recursion",
                        1000000, criterion_cmd);
    p.audit = "genealogical";
    add_rates(sub, p);
    add_dim(sub, p);
    sub->add_option("--p", p.p_lower, "lower bound for P[I] to use instead of estimating it (negative: estimate)")
        ->capture_default_str();
    sub->add_option("--k-max", p.k_max, "recursion depth (0 skips)")->capture_default_str()->check(CLI::Range(0, 50));
    sub->add_option("--recursion-reps", p.recursion_reps, "replications for the recursion")->capture_default_str();
    sub->add_option("--cap", p.cap, "population cap for the recursion")->capture_default_str();
    sub->add_option("--audit", p.audit, "audit level for the recursion")
        ->capture_default_str()
        ->check(CLI::IsMember(kAudits));
  }
  {
    auto [sub, p] = add("survival", "survival of the stirred contact process from one particle", 1000, survival_cmd);
    p.lambda = 1.7;
    p.n_rate = 0.0;
    p.horizon = 50.0;
    p.cap = 10000;
    add_rates(sub, p);
    add_dim(sub, p);
    sub->add_option("--t", p.horizon, "horizon")->capture_default_str()->check(CLI::PositiveNumber);
    sub->add_option("--cap", p.cap, "population counted as survival")->capture_default_str();
  }
  {
    auto [sub, p] = add("lambda-c", "bisection for the lambda at which survival reaches the threshold", 2000,
                        lambda_c_cmd);
    p.n_rate = 0.0;
    p.horizon = 50.0;
    p.cap = 500;
    sub->add_option("--N", p.n_rate, "stirring rate")->capture_default_str()->check(CLI::NonNegativeNumber);
    add_dim(sub, p);
    sub->add_option("--t", p.horizon, "horizon")->capture_default_str()->check(CLI::PositiveNumber);
    sub->add_option("--cap", p.cap, "population counted as survival")->capture_default_str();
    sub->add_option("--threshold", p.threshold, "survival threshold")->capture_default_str();
    sub->add_option("--tol", p.tol, "interval width")->capture_default_str()->check(CLI::PositiveNumber);
    sub->add_option("--lower", p.lower, "initial lower endpoint")->capture_default_str();
    sub->add_option("--upper", p.upper, "initial upper endpoint")->capture_default_str();
    sub->add_option("--batch", p.batch, "replications between early-stop checks")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
  }
  {
    auto [sub, p] = add("bound", "asymptotic lower bound for lambda_c(N)", 0, bound_cmd);
    p.n_rates = {10.0, 100.0, 1000.0};
    add_dim(sub, p, 2);
    sub->add_option("--N", p.n_rates, "stirring rates")->capture_default_str()->check(CLI::PositiveNumber);
  }
  {
    auto [sub, p] = add("suite", "acceptance bundle: constants, renewal, coupling, criterion or all", 0, suite_cmd);
    sub->add_option("name", p.suite, "suite name")
        ->capture_default_str()
        ->check(CLI::IsMember({"constants", "renewal", "coupling", "criterion", "all"}));
    sub->add_option("--scale", p.scale, "replication multiplier")->capture_default_str()->check(CLI::PositiveNumber);
  }
  return cmds;
}

void write_table(const Result& r, const Params& p, std::ostream& out) {
  const Provenance prov{p.seed};
  auto emit = [&](std::ostream& o) {
    if (p.format == "json") {
      write_json(o, r.table, prov);
    } else {
      write_csv(o, r.table, prov);
    }
  };
  if (p.out.empty() || p.out == "-") {
    emit(out);
    return;
  }
  std::ofstream f(p.out, std::ios::binary);
  if (!f) throw ConfigError("cannot open output file " + p.out);
  emit(f);
  if (!f) throw ConfigError("failed writing " + p.out);
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& diag) {
  CLI::App app{"cpstir: contact process with stirring, Monte Carlo experiments", "cpstir"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "read options from an INI/TOML file; command-line flags win");
  bool dump_config = false;
  app.add_flag("--dump-config", dump_config, "print the resolved configuration and exit")->configurable(false);
  const auto cmds = build(app);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::CallForVersion&) {
    out << version() << '\n';
    return kOk;
  } catch (const CLI::ParseError& e) {
    diag << "error: " << e.what() << '\n';
    return kConfigError;
  }

  if (dump_config) {
    // Defaults print in their declared form and parsed values in canonical
    // form, so one reload makes the dump a fixed point.
    std::string text;
    for (const auto& c : cmds) {
      if (c.app->parsed()) text = '[' + c.app->get_name() + "]\n" + c.app->config_to_str(true, false);
    }
    CLI::App reload;
    reload.require_subcommand(1);
    const auto again = build(reload);
    std::istringstream in(text);
    reload.parse_from_stream(in);
    for (const auto& c : again) {
      if (c.app->parsed()) out << '[' << c.app->get_name() << "]\n" << c.app->config_to_str(true, false);
    }
    return kOk;
  }

  for (const auto& c : cmds) {
    if (!c.app->parsed()) continue;
    try {
      const Result r = c.handler(*c.params, diag);
      write_table(r, *c.params, out);
      diag << r.summary << '\n';
      return r.code;
    } catch (const InvariantViolation& e) {
      diag << "invariant breach: " << e.what() << '\n';
      return kInvariantBreach;
    } catch (const std::exception& e) {
      diag << "error: " << e.what() << '\n';
      return kConfigError;
    }
  }
  diag << "error: no subcommand\n";
  return kConfigError;
}

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace cpstir::cli
