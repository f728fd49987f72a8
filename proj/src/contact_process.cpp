#include "cpstir/contact_process.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "cpstir/distributions.hpp"
#include "cpstir/exclusion_pair.hpp"
#include "cpstir/replicate.hpp"

namespace cpstir {

namespace {

void validate(const ContactOptions& o) {
  if (!(o.lambda >= 0.0) || !std::isfinite(o.lambda)) throw std::invalid_argument("lambda must be >= 0");
  if (!(o.n_rate >= 0.0) || !std::isfinite(o.n_rate)) throw std::invalid_argument("N must be >= 0");
  check_dimension(o.dim);
}

}  // namespace

ContactProcess::ContactProcess(const ContactOptions& options)
    : ContactProcess(options, {Site::origin(options.dim)}) {}

ContactProcess::ContactProcess(const ContactOptions& options, const std::vector<Site>& initial)
    : options_(options) {
  validate(options);
  for (const auto& x : initial) {
    if (x.dim() != options.dim) throw std::invalid_argument("site dimension mismatch");
    if (!contains(x)) insert(x);
  }
}

void ContactProcess::insert(const Site& x) {
  for (int dir = 0; dir < num_directions(options_.dim); ++dir) {
    if (contains(x.shifted(dir))) {
      --mixed_edges_;
      ++full_edges_;
    } else {
      ++mixed_edges_;
    }
  }
  index_.emplace(x, sites_.size());
  sites_.push_back(x);
}

void ContactProcess::erase(const Site& x) {
  auto it = index_.find(x);
  const std::size_t slot = it->second;
  index_.erase(it);
  if (slot + 1 != sites_.size()) {
    sites_[slot] = sites_.back();
    index_[sites_[slot]] = slot;
  }
  sites_.pop_back();
  for (int dir = 0; dir < num_directions(options_.dim); ++dir) {
    if (contains(x.shifted(dir))) {
      --full_edges_;
      ++mixed_edges_;
    } else {
      --mixed_edges_;
    }
  }
}

double ContactProcess::total_rate() const noexcept {
  return static_cast<double>(sites_.size()) * (1.0 + options_.lambda) +
         options_.n_rate * static_cast<double>(active_edges());
}

double ContactProcess::effective_rate() const noexcept {
  return static_cast<double>(sites_.size()) * (1.0 + options_.lambda) +
         options_.n_rate * static_cast<double>(mixed_edges_);
}

std::pair<std::uint64_t, std::uint64_t> ContactProcess::recount_edges() const {
  std::uint64_t mixed = 0, full_twice = 0;
  for (const auto& x : sites_) {
    for (int dir = 0; dir < num_directions(options_.dim); ++dir) {
      if (contains(x.shifted(dir))) {
        ++full_twice;
      } else {
        ++mixed;
      }
    }
  }
  return {mixed, full_twice / 2};
}

double ContactProcess::step(SeededStream& s) {
  if (sites_.empty()) throw std::logic_error("step on the empty configuration");
  const double dt = sample_exponential(s, effective_rate());
  time_ += dt;
  apply_event(s);
  return dt;
}

void ContactProcess::apply_event(SeededStream& s) {
  const double n = static_cast<double>(sites_.size());
  const double u = s.uniform() * effective_rate();
  const int dim = options_.dim;
  if (u < n) {
    const Site x = sites_[s.below(sites_.size())];
    erase(x);
    last_ = Event::death;
  } else if (u < n * (1.0 + options_.lambda)) {
    const Site& x = sites_[s.below(sites_.size())];
    const Site y = x.shifted(sample_direction(s, dim));
    if (contains(y)) {
      last_ = Event::void_birth;
    } else {
      insert(y);
      last_ = Event::birth;
    }
  } else {
    // Uniform edge with exactly one occupied endpoint.
    for (;;) {
      const Site x = sites_[s.below(sites_.size())];
      const Site y = x.shifted(sample_direction(s, dim));
      if (!contains(y)) {
        erase(x);
        insert(y);
        break;
      }
    }
    last_ = Event::stir;
  }
}

void ContactProcess::run_until(double horizon, SeededStream& s, std::size_t cap) {
  while (!sites_.empty() && (cap == 0 || sites_.size() < cap)) {
    const double dt = sample_exponential(s, effective_rate());
    // An event past the horizon is discarded: the holding time is memoryless.
    if (time_ + dt >= horizon) {
      time_ = horizon;
      return;
    }
    time_ += dt;
    apply_event(s);
  }
}

namespace {

struct SurvivalAcc {
  MeanAccumulator survived;
  std::uint64_t alive = 0;
  std::uint64_t capped = 0;
  void merge(const SurvivalAcc& o) {
    survived.merge(o.survived);
    alive += o.alive;
    capped += o.capped;
  }
};

SurvivalAcc survival_runs(const ContactOptions& options, double horizon, std::size_t cap, std::uint64_t n_reps,
                          const SeededStream& s, unsigned workers, std::uint64_t first_rep) {
  return replicate(
      n_reps, workers, s, [] { return SurvivalAcc{}; },
      [&](std::uint64_t, SeededStream& rs, SurvivalAcc& a) {
        ContactProcess cp(options);
        cp.run_until(horizon, rs, cap);
        const bool hit_cap = cp.size() >= cap;
        const bool alive = !cp.empty() && !hit_cap;
        a.capped += hit_cap;
        a.alive += alive;
        a.survived.add(hit_cap || alive ? 1.0 : 0.0);
      },
      first_rep);
}

}  // namespace

EstimateReport survival_probability(const ContactOptions& options, double horizon, std::size_t cap,
                                    std::uint64_t n_reps, const SeededStream& s, unsigned workers,
                                    std::uint64_t first_rep) {
  validate(options);
  require_replications(n_reps);
  if (!(horizon >= 0.0)) throw std::invalid_argument("horizon must be >= 0");
  if (cap == 0) throw std::invalid_argument("population cap must be positive");
  const auto acc = survival_runs(options, horizon, cap, n_reps, s, workers, first_rep);
  auto r = acc.survived.report();
  const double reps = static_cast<double>(n_reps);
  r.with("lambda", options.lambda)
      .with("N", options.n_rate)
      .with("d", options.dim)
      .with("horizon", horizon)
      .with("cap", static_cast<double>(cap))
      .with("alive_at_horizon", static_cast<double>(acc.alive) / reps)
      .with("hit_cap", static_cast<double>(acc.capped) / reps);
  return r;
}

LambdaCInterval estimate_lambda_c(const LambdaCSearch& q, const SeededStream& s, unsigned workers) {
  if (!(q.lower < q.upper) || !(q.lower >= 0.0)) throw std::invalid_argument("need 0 <= lower < upper");
  if (!(q.tol > 0.0)) throw std::invalid_argument("tol must be positive");
  if (!(q.threshold < 1.0)) throw std::invalid_argument("threshold must be < 1");
  if (q.batch < 2 || q.reps_per_probe < q.batch) throw std::invalid_argument("need 2 <= batch <= reps_per_probe");
  LambdaCInterval out{q.lower, q.upper, {}, "finite-horizon survival proxy, not the infinite-time critical value"};
  if (q.threshold <= 0.0) {
    out.upper = q.lower;
    out.note = "threshold <= 0: every lambda survives";
    return out;
  }

  auto probe = [&](double lambda) {
    ContactOptions opt{lambda, q.n_rate, q.dim};
    validate(opt);
    MeanAccumulator m;
    std::uint64_t done = 0;
    double p = 0.0, se = 0.0;
    while (done < q.reps_per_probe) {
      const std::uint64_t n = std::min(q.batch, q.reps_per_probe - done);
      m.merge(survival_runs(opt, q.horizon, q.cap, n, s, workers, done).survived);
      done += n;
      p = m.mean();
      // Floor the error by the binomial error at the threshold so a run of
      // zero hits cannot stop the probe early with a zero error bar.
      se = std::max(m.std_error(), std::sqrt(q.threshold * (1.0 - q.threshold) / static_cast<double>(done)));
      if (std::abs(p - q.threshold) > 3.0 * se) break;
    }
    LambdaProbe pr{lambda, p, m.std_error(), done, p >= q.threshold};
    out.probes.push_back(pr);
    return pr.above;
  };

  if (probe(q.lower)) throw std::invalid_argument("lower endpoint already survives: interval does not bracket");
  if (!probe(q.upper)) throw std::invalid_argument("upper endpoint does not survive: interval does not bracket");
  double lo = q.lower, hi = q.upper;
  while (hi - lo > q.tol) {
    const double mid = 0.5 * (lo + hi);
    if (probe(mid)) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  out.lower = lo;
  out.upper = hi;
  return out;
}

double asymptotic_lower_bound(int dim, double n_rate) {
  if (!(n_rate > std::exp(1.0)) || !std::isfinite(n_rate)) throw std::invalid_argument("bound needs N > e");
  if (dim == 3) return 1.0 + (green_constant_d3() - 1.0) / (2.0 * 3.0 * n_rate);
  if (dim == 2) return 1.0 + std::log(n_rate) / (4.0 * std::numbers::pi * n_rate);
  throw std::invalid_argument("bound is defined for d = 2 and d = 3");
}

}  // namespace cpstir
