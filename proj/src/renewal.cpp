#include "cpstir/renewal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "cpstir/replicate.hpp"

namespace cpstir {

std::string RenewalSpec::describe() const {
  return "u1=" + u1.to_string() + ";u2=" + u2.to_string() + ";v=" + v.to_string();
}

double LazySequence::operator[](std::size_t n) {
  while (values_.size() <= n) values_.push_back(sample_distribution(spec_, stream_));
  return values_[n];
}

namespace {

// Largest n with S_{2n} <= t; the path must extend past t.
std::int64_t renewals_at(const std::vector<double>& s_points, double t) {
  std::int64_t n = 0;
  for (std::size_t k = 2; k < s_points.size(); k += 2) {
    if (s_points[k] <= t) {
      n = static_cast<std::int64_t>(k / 2);
    } else {
      break;
    }
  }
  return n;
}

struct Sequences {
  LazySequence u1;
  LazySequence u2;
  LazySequence v1;
  LazySequence v2;  // unused when V is shared
  bool shared_v;

  Sequences(const RenewalSpec& spec, const SeededStream& s, PairOptions options)
      : u1(spec.u1, s.child(options.common_u ? "u" : "u1")),
        u2(spec.u2, s.child(options.common_u ? "u" : "u2")),
        v1(spec.v, s.child("v")),
        v2(spec.v, s.child("v2")),
        shared_v(options.v_coupling == VCoupling::shared) {}

  LazySequence& second_v() { return shared_v ? v1 : v2; }
};

void check_horizon(double t) {
  if (!(t > 0.0) || !std::isfinite(t)) throw std::invalid_argument("horizon must be positive and finite");
}

}  // namespace

double RenewalPath::kappa_from_u_blocks() const {
  double k = 0.0;
  for (std::size_t i = 0; i + 1 < s_points.size(); i += 2) {
    if (s_points[i] > horizon) break;
    k += std::min(horizon, s_points[i + 1]) - s_points[i];
  }
  return k;
}

double RenewalPath::kappa_from_v_blocks() const {
  double v = 0.0;
  for (std::size_t i = 1; i + 1 < s_points.size(); i += 2) {
    if (s_points[i] > horizon) break;
    v += std::min(horizon, s_points[i + 1]) - s_points[i];
  }
  return horizon - v;
}

std::int64_t RenewalPath::count_renewals() const { return renewals_at(s_points, horizon); }

RenewalPath build_path(double horizon, LazySequence& u, LazySequence& v) {
  check_horizon(horizon);
  RenewalPath p;
  p.horizon = horizon;
  p.s_points.push_back(0.0);
  double u_sum = 0.0;
  for (std::size_t n = 0;; ++n) {
    const double s_even = p.s_points.back();
    const double s_odd = s_even + u[n];
    const double s_next = s_odd + v[n];
    p.s_points.push_back(s_odd);
    p.s_points.push_back(s_next);
    if (s_next > horizon) {
      p.n_t = static_cast<std::int64_t>(n);
      p.kappa = u_sum + std::min(horizon, s_odd) - s_even;
      break;
    }
    u_sum += u[n];
  }
  return p;
}

RenewalPair simulate_pair(const RenewalSpec& spec, double horizon, const SeededStream& s, PairOptions options) {
  Sequences seq(spec, s, options);
  RenewalPair out;
  out.first = build_path(horizon, seq.u1, seq.v1);
  out.second = build_path(horizon, seq.u2, seq.second_v());
  out.u1 = seq.u1.drawn();
  out.u2 = seq.u2.drawn();
  out.v1 = seq.v1.drawn();
  out.v2 = seq.second_v().drawn();
  return out;
}

EstimateReport kappa_ratio(const RenewalSpec& spec, double horizon, std::uint64_t n_reps, const SeededStream& s,
                           unsigned workers, PairOptions options) {
  check_horizon(horizon);
  require_replications(n_reps);
  auto acc = replicate(
      n_reps, workers, s, [] { return RatioAccumulator{}; },
      [&](std::uint64_t, SeededStream& rs, RatioAccumulator& a) {
        Sequences seq(spec, rs, options);
        const auto p1 = build_path(horizon, seq.u1, seq.v1);
        const auto p2 = build_path(horizon, seq.u2, seq.second_v());
        a.add(p1.kappa, p2.kappa);
      });
  auto r = acc.report();
  r.with("horizon", horizon).with("target", spec.u1.mean() / spec.u2.mean());
  if (std::isfinite(spec.v.mean())) {
    r.notes.push_back("V has finite mean; the ratio limit is not covered by the infinite-mean hypothesis");
  }
  if (!spec.u1.has_finite_second_moment() || !spec.u2.has_finite_second_moment()) {
    r.notes.push_back("a U distribution lacks a finite second moment");
  }
  if (options.v_coupling == VCoupling::independent) {
    r.notes.push_back("independent V-sequences (sensitivity option)");
  }
  return r;
}

double delta_m(std::span<const double> u1, std::span<const double> u2, std::size_t m) {
  if (m >= u1.size() || m >= u2.size()) throw std::out_of_range("delta_m index beyond drawn sequence");
  double s1 = 0.0, s2 = 0.0;
  for (std::size_t n = 0; n < m; ++n) {
    s1 += u1[n];
    s2 += u2[n];
  }
  // max |t - t'| over a box is attained at opposite corners.
  return std::max(s1 + u1[m] - s2, s2 + u2[m] - s1);
}

std::vector<double> delta_sequence(std::span<const double> u1, std::span<const double> u2, std::size_t m_max) {
  if (m_max >= u1.size() || m_max >= u2.size()) throw std::out_of_range("delta_sequence beyond drawn sequence");
  std::vector<double> out(m_max + 1);
  double s1 = 0.0, s2 = 0.0;
  for (std::size_t m = 0; m <= m_max; ++m) {
    out[m] = std::max(s1 + u1[m] - s2, s2 + u2[m] - s1);
    s1 += u1[m];
    s2 += u2[m];
  }
  return out;
}

EstimateReport delta_max_statistic(const DistributionSpec& u2, std::uint64_t k, std::uint64_t n_reps,
                                   const SeededStream& s, unsigned workers) {
  require_replications(n_reps);
  if (std::abs(u2.mean() - 1.0) > 1e-12) throw std::invalid_argument("delta_max_statistic needs E[U2] = 1");
  if (!u2.has_finite_second_moment()) throw std::invalid_argument("delta_max_statistic needs E[U2^2] < inf");
  auto acc = replicate(
      n_reps, workers, s, [] { return MeanAccumulator{}; },
      [&](std::uint64_t, SeededStream& rs, MeanAccumulator& a) {
        LazySequence seq(u2, rs.child("u2"));
        double s1 = 0.0, s2 = 0.0, best = 0.0;
        for (std::uint64_t m = 0; m <= k; ++m) {
          const double x = seq[m];
          best = std::max(best, std::max(s1 + 1.0 - s2, s2 + x - s1));
          s1 += 1.0;
          s2 += x;
        }
        a.add(best);
      });
  auto r = acc.report();
  r.with("k", static_cast<double>(k));
  return r;
}

std::vector<EstimateReport> n_t_sublinearity(const RenewalSpec& spec, std::span<const double> horizons,
                                             std::uint64_t n_reps, const SeededStream& s, unsigned workers) {
  require_replications(n_reps);
  if (horizons.empty()) throw std::invalid_argument("n_t_sublinearity needs at least one horizon");
  for (std::size_t i = 0; i < horizons.size(); ++i) {
    check_horizon(horizons[i]);
    if (i && horizons[i] <= horizons[i - 1]) throw std::invalid_argument("horizons must be increasing");
  }
  const std::size_t n_h = horizons.size();
  auto acc = replicate(
      n_reps, workers, s, [n_h] { return AccumulatorArray<MeanAccumulator>(n_h); },
      [&](std::uint64_t, SeededStream& rs, AccumulatorArray<MeanAccumulator>& a) {
        Sequences seq(spec, rs, {});
        const auto path = build_path(horizons.back(), seq.u1, seq.v1);
        for (std::size_t i = 0; i < n_h; ++i) {
          a[i].add(static_cast<double>(renewals_at(path.s_points, horizons[i])) / horizons[i]);
        }
      });
  std::vector<EstimateReport> out;
  for (std::size_t i = 0; i < n_h; ++i) {
    auto r = acc[i].report();
    r.with("horizon", horizons[i]);
    out.push_back(std::move(r));
  }
  return out;
}

namespace {

struct BoundAccumulator {
  BoundCheckResult result{0, 0, std::numeric_limits<double>::infinity()};
  void merge(const BoundAccumulator& o) {
    result.paths += o.result.paths;
    result.violations += o.result.violations;
    result.min_slack = std::min(result.min_slack, o.result.min_slack);
  }
};

}  // namespace

BoundCheckResult kappa_difference_bound_check(const RenewalSpec& spec, double horizon, std::uint64_t n_reps,
                                              const SeededStream& s, unsigned workers) {
  check_horizon(horizon);
  if (!spec.u1.is_deterministic() || spec.u1.mean() != 1.0) {
    throw std::invalid_argument("kappa_difference_bound_check requires u1 = det:1");
  }
  if (n_reps == 0) throw std::invalid_argument("n_reps must be positive");
  auto acc = replicate(
      n_reps, workers, s, [] { return BoundAccumulator{}; },
      [&](std::uint64_t, SeededStream& rs, BoundAccumulator& a) {
        Sequences seq(spec, rs, {});
        const auto p1 = build_path(horizon, seq.u1, seq.v1);
        const auto p2 = build_path(horizon, seq.u2, seq.v1);
        const auto n1 = static_cast<std::size_t>(p1.n_t);
        seq.u1[n1];
        seq.u2[n1];
        const auto deltas = delta_sequence(seq.u1.drawn(), seq.u2.drawn(), n1);
        const double bound = *std::max_element(deltas.begin(), deltas.end());
        const double gap = std::abs(p2.kappa - p1.kappa);
        const double slack = bound - gap;
        ++a.result.paths;
        // Rounding slack: both sides are sums of O(N_t) doubles of size <= t.
        if (slack < -1e-9 * horizon) ++a.result.violations;
        a.result.min_slack = std::min(a.result.min_slack, slack);
      });
  return acc.result;
}

}  // namespace cpstir
