#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "cpstir/acceptance.hpp"
#include "cpstir/cli.hpp"
#include "cpstir/contact_process.hpp"
#include "cpstir/exclusion_pair.hpp"
#include "cpstir/genealogy.hpp"
#include "cpstir/renewal.hpp"
#include "cpstir/report.hpp"

namespace py = pybind11;
using namespace cpstir;

namespace {

// Streams are labelled like the matching CLI subcommand, so a seed gives the
// same numbers from Python and from the command line.
SeededStream stream(std::uint64_t seed, const char* label) { return SeededStream(seed, label); }

WalkKind walk_kind(const std::string& kind) {
  if (kind == "X") return WalkKind::exclusion_difference;
  if (kind == "Y") return WalkKind::free_difference;
  throw std::invalid_argument("kind must be X or Y");
}

TrackedSet tracked_set(const std::string& set) {
  if (set == "N0") return TrackedSet::neighbors;
  if (set == "closedN0") return TrackedSet::closed_neighbors;
  throw std::invalid_argument("set must be N0 or closedN0");
}

ExcursionTarget excursion_target(const std::string& kind, const std::string& target) {
  if (kind == "X") {
    if (target != "exit") throw std::invalid_argument("kind X only has target exit");
    return ExcursionTarget::u_x;
  }
  if (target == "exit") return ExcursionTarget::u_y;
  if (target == "n0") return ExcursionTarget::u_y_n0;
  if (target == "origin") return ExcursionTarget::u_y_0;
  throw std::invalid_argument("target must be exit, n0 or origin");
}

AuditLevel audit_level(const std::string& audit) {
  if (audit == "none") return AuditLevel::none;
  if (audit == "genealogical") return AuditLevel::genealogical;
  if (audit == "every_event") return AuditLevel::every_event;
  throw std::invalid_argument("audit must be none, genealogical or every_event");
}

RenewalSpec renewal_spec(const std::string& u1, const std::string& u2, const std::string& v) {
  return {DistributionSpec::parse(u1), DistributionSpec::parse(u2), DistributionSpec::parse(v)};
}

CoupledOptions coupled(double lambda, double n_rate, int dim, const std::string& audit, std::size_t cap) {
  CoupledOptions o;
  o.lambda = lambda;
  o.n_rate = n_rate;
  o.dim = dim;
  o.audit = audit_level(audit);
  o.population_cap = cap;
  return o;
}

py::dict summary_dict(const CoupledSummary& c) {
  py::dict d;
  d["runs"] = c.runs;
  d["violations"] = c.violations;
  d["truncated"] = c.truncated;
  d["strict_runs"] = c.strict_runs;
  d["mean_psi"] = c.psi.mean();
  d["se_psi"] = c.psi.std_error();
  d["mean_xi"] = c.xi.mean();
  d["se_xi"] = c.xi.std_error();
  d["first_violation"] = c.first_violation;
  return d;
}

py::dict event_dict(const EventEstimate& e) {
  py::dict d;
  d["probability"] = e.probability;
  d["pattern"] = e.pattern;
  d["occurrences"] = e.occurrences;
  d["audit_violations"] = e.audit_violations;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Monte Carlo estimators for the contact process with stirring";
  py::register_exception<InvariantViolation>(m, "InvariantViolation");

  py::class_<EstimateReport>(m, "EstimateReport")
      .def_readonly("n_reps", &EstimateReport::n_reps)
      .def_readonly("mean", &EstimateReport::mean)
      .def_readonly("std_error", &EstimateReport::std_error)
      .def_property_readonly("extra",
                             [](const EstimateReport& r) {
                               py::dict d;
                               for (const auto& [k, v] : r.extra) d[py::str(k)] = v;
                               return d;
                             })
      .def_readonly("notes", &EstimateReport::notes)
      .def("__repr__", [](const EstimateReport& r) {
        return "EstimateReport(mean=" + format_double(r.mean) + ", std_error=" + format_double(r.std_error) +
               ", n_reps=" + std::to_string(r.n_reps) + ")";
      });

  m.def("version", [] { return std::string(version()); });

  m.def(
      "excursion_mean",
      [](const std::string& kind, const std::string& target, int d, std::uint64_t reps, std::uint64_t seed,
         unsigned workers) {
        py::gil_scoped_release release;
        return excursion_mean(walk_kind(kind), excursion_target(kind, target), d, reps,
                              stream(seed, "excursion-mean"), workers);
      },
      py::arg("kind") = "X", py::arg("target") = "exit", py::arg("d") = 2, py::arg("reps") = 100000,
      py::arg("seed") = 20240601, py::arg("workers") = 1);

  m.def(
      "local_time",
      [](const std::string& kind, const std::string& set, std::vector<double> horizons, int d, std::uint64_t reps,
         std::uint64_t seed, unsigned workers) {
        py::gil_scoped_release release;
        return local_time_series(walk_kind(kind), tracked_set(set), horizons, d, reps, stream(seed, "local-time"),
                                 workers);
      },
      py::arg("kind") = "X", py::arg("set") = "N0", py::arg("horizons") = std::vector<double>{1e4},
      py::arg("d") = 2, py::arg("reps") = 10000, py::arg("seed") = 20240601, py::arg("workers") = 1);

  m.def(
      "local_time_slope",
      [](const std::string& kind, const std::string& set, std::vector<double> horizons, int d, std::uint64_t reps,
         std::uint64_t seed, unsigned workers) {
        py::gil_scoped_release release;
        return local_time_log_slope(walk_kind(kind), tracked_set(set), horizons, d, reps,
                                    stream(seed, "local-time"), workers);
      },
      py::arg("kind") = "Y", py::arg("set") = "N0", py::arg("horizons"), py::arg("d") = 2,
      py::arg("reps") = 1000, py::arg("seed") = 20240601, py::arg("workers") = 1);

  m.def("green_constant_d3", &green_constant_d3);
  m.def("green_origin_d3_quadrature", &green_origin_d3_quadrature, py::arg("order") = 64);

  m.def(
      "kappa_ratio",
      [](const std::string& u1, const std::string& u2, const std::string& v, double t, std::uint64_t reps,
         std::uint64_t seed, unsigned workers, bool independent_v) {
        PairOptions po;
        po.v_coupling = independent_v ? VCoupling::independent : VCoupling::shared;
        py::gil_scoped_release release;
        return kappa_ratio(renewal_spec(u1, u2, v), t, reps, stream(seed, "renewal-ratio"), workers, po);
      },
      py::arg("u1") = "det:1", py::arg("u2") = "exp:1", py::arg("v") = "pareto:0.5,1", py::arg("t") = 1e6,
      py::arg("reps") = 200, py::arg("seed") = 20240601, py::arg("workers") = 1, py::arg("independent_v") = false);

  m.def(
      "delta_max",
      [](const std::string& u2, std::uint64_t k, std::uint64_t reps, std::uint64_t seed, unsigned workers) {
        py::gil_scoped_release release;
        return delta_max_statistic(DistributionSpec::parse(u2), k, reps, stream(seed, "delta-max"), workers);
      },
      py::arg("u2") = "exp:1", py::arg("k") = 100, py::arg("reps") = 10000, py::arg("seed") = 20240601,
      py::arg("workers") = 1);

  m.def(
      "kappa_bound",
      [](const std::string& u1, const std::string& u2, const std::string& v, double t, std::uint64_t reps,
         std::uint64_t seed, unsigned workers) {
        py::gil_scoped_release release;
        const auto r =
            kappa_difference_bound_check(renewal_spec(u1, u2, v), t, reps, stream(seed, "kappa-bound"), workers);
        return std::make_tuple(r.paths, r.violations, r.min_slack);
      },
      py::arg("u1") = "det:1", py::arg("u2") = "exp:1", py::arg("v") = "pareto:0.5,1", py::arg("t") = 1e3,
      py::arg("reps") = 10000, py::arg("seed") = 20240601, py::arg("workers") = 1);

  m.def(
      "psi_mean",
      [](double lambda, double t, std::uint64_t reps, std::uint64_t seed, unsigned workers, std::size_t cap) {
        py::gil_scoped_release release;
        return psi_mean(lambda, t, reps, stream(seed, "psi-mean"), workers, cap);
      },
      py::arg("lambda_") = 1.2, py::arg("t") = 5.0, py::arg("reps") = 100000, py::arg("seed") = 20240601,
      py::arg("workers") = 1, py::arg("cap") = 100000);

  m.def(
      "coupled_summary",
      [](double lambda, double n_rate, int d, double t, std::uint64_t reps, const std::string& audit,
         std::uint64_t seed, unsigned workers, std::size_t cap) {
        CoupledSummary c;
        {
          py::gil_scoped_release release;
          c = coupled_summary(coupled(lambda, n_rate, d, audit, cap), t, reps, stream(seed, "coupled-run"), workers);
        }
        return summary_dict(c);
      },
      py::arg("lambda_") = 1.5, py::arg("N") = 10.0, py::arg("d") = 2, py::arg("t") = 5.0, py::arg("reps") = 1000,
      py::arg("audit") = "every_event", py::arg("seed") = 20240601, py::arg("workers") = 1,
      py::arg("cap") = 100000);

  m.def("star_time", &star_time, py::arg("N"));
  m.def("event_e_probability", &event_E_probability, py::arg("lambda_"), py::arg("N"));
  m.def(
      "event_e",
      [](double lambda, double n_rate, std::uint64_t reps, std::uint64_t seed, unsigned workers) {
        py::gil_scoped_release release;
        return estimate_event_E(lambda, n_rate, reps, stream(seed, "event-e"), workers);
      },
      py::arg("lambda_") = 1.0, py::arg("N") = 100.0, py::arg("reps") = 1000000, py::arg("seed") = 20240601,
      py::arg("workers") = 1);
  for (const bool is_i : {true, false}) {
    m.def(
        is_i ? "event_i" : "event_j",
        [is_i](double lambda, double n_rate, int d, std::uint64_t reps, std::uint64_t seed, unsigned workers) {
          EventEstimate e;
          {
            py::gil_scoped_release release;
            e = is_i ? estimate_I_prob(lambda, n_rate, d, reps, stream(seed, "event-i"), workers)
                     : estimate_J_prob(lambda, n_rate, d, reps, stream(seed, "event-j"), workers);
          }
          return event_dict(e);
        },
        py::arg("lambda_") = 1.0, py::arg("N") = 100.0, py::arg("d") = 2, py::arg("reps") = 1000000,
        py::arg("seed") = 20240601, py::arg("workers") = 1);
  }

  m.def(
      "extinction_criterion",
      [](double lambda, double n_rate, double p_lower) {
        const auto r = extinction_criterion(lambda, n_rate, p_lower);
        return std::make_tuple(std::string(to_string(r.verdict)), r.growth_factor, r.p_used);
      },
      py::arg("lambda_"), py::arg("N"), py::arg("p_lower"));

  m.def(
      "survival_probability",
      [](double lambda, double n_rate, int d, double t, std::size_t cap, std::uint64_t reps, std::uint64_t seed,
         unsigned workers) {
        py::gil_scoped_release release;
        return survival_probability({lambda, n_rate, d}, t, cap, reps, stream(seed, "survival"), workers);
      },
      py::arg("lambda_") = 1.7, py::arg("N") = 0.0, py::arg("d") = 2, py::arg("t") = 50.0, py::arg("cap") = 10000,
      py::arg("reps") = 1000, py::arg("seed") = 20240601, py::arg("workers") = 1);

  m.def(
      "lambda_c",
      [](double n_rate, int d, double t, std::size_t cap, double threshold, double tol, double lower, double upper,
         std::uint64_t reps, std::uint64_t batch, std::uint64_t seed, unsigned workers) {
        LambdaCSearch q{d, n_rate, t, cap, threshold, tol, lower, upper, reps, std::min(batch, reps)};
        LambdaCInterval iv;
        {
          py::gil_scoped_release release;
          iv = estimate_lambda_c(q, stream(seed, "lambda-c"), workers);
        }
        return std::make_tuple(iv.lower, iv.upper, iv.probes.size());
      },
      py::arg("N") = 0.0, py::arg("d") = 2, py::arg("t") = 50.0, py::arg("cap") = 500, py::arg("threshold") = 0.02,
      py::arg("tol") = 0.02, py::arg("lower") = 0.8, py::arg("upper") = 2.5, py::arg("reps") = 2000,
      py::arg("batch") = 200, py::arg("seed") = 20240601, py::arg("workers") = 1);

  m.def("asymptotic_lower_bound", &asymptotic_lower_bound, py::arg("d"), py::arg("N"));

  m.def(
      "run_criterion",
      [](int id, double scale, unsigned workers, std::uint64_t seed) {
        acceptance::Outcome o;
        {
          py::gil_scoped_release release;
          o = acceptance::run_criterion(id, {scale, workers, seed});
        }
        py::dict d;
        d["id"] = o.id;
        d["name"] = o.name;
        d["passed"] = o.passed;
        d["measured"] = o.measured;
        d["target"] = o.target;
        d["detail"] = o.detail;
        return d;
      },
      py::arg("id"), py::arg("scale") = 1.0, py::arg("workers") = 1, py::arg("seed") = 20240601);

  m.def(
      "cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, diag;
        int code;
        {
          py::gil_scoped_release release;
          code = cli::run(args, out, diag);
        }
        return std::make_tuple(code, out.str(), diag.str());
      },
      py::arg("args"), "Runs one CLI subcommand; returns (exit code, table text, diagnostics).");
}
