#include "cpstir/exclusion_pair.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "cpstir/distributions.hpp"
#include "cpstir/replicate.hpp"

namespace cpstir {
namespace {

// Upper bound on jump-chain steps simulated between two clock updates.
constexpr int kOutsideBatch = 1024;

// Advances the jump chain from a point outside `set` until it enters `set` or
// kOutsideBatch steps have been taken; returns the number of steps.
int outside_chain(Site& x, TrackedSet set, SeededStream& s) {
  const int d = x.dim();
  std::array<std::int64_t, kMaxDim> c{x[0], x[1], x[2]};
  std::int64_t norm = x.l1_norm();
  const bool closed = set == TrackedSet::closed_neighbors;
  int k = 0;
  do {
    const auto dir = static_cast<int>(s.below(static_cast<std::uint64_t>(2 * d)));
    std::int64_t& v = c[dir >> 1];
    norm -= v < 0 ? -v : v;
    v += (dir & 1) ? -1 : 1;
    norm += v < 0 ? -v : v;
    ++k;
  } while (k < kOutsideBatch && (closed ? norm > 1 : norm != 1));
  x = Site::from_coords(d, c);
  return k;
}

}  // namespace

double total_jump_rate(const Site& x, WalkKind kind) {
  const int d = x.dim();
  if (kind == WalkKind::exclusion_difference && x.is_unit()) return 1.0 + 2.0 * (2 * d - 1);
  return 4.0 * d;
}

Site sample_jump(const Site& x, WalkKind kind, SeededStream& s) {
  const int d = x.dim();
  if (kind == WalkKind::exclusion_difference && x.is_unit()) {
    // Weights: 1 for the swap to -x, 2 for each of the 2d - 1 directions that
    // do not lead to the origin.
    const int toward_origin = opposite(x.unit_direction());
    const auto r = static_cast<int>(s.below(static_cast<std::uint64_t>(4 * d - 1)));
    if (r == 0) return -x;
    int dir = (r - 1) / 2;
    if (dir >= toward_origin) ++dir;
    return x.shifted(dir);
  }
  return x.shifted(sample_direction(s, d));
}

StepOutcome step(const DifferenceState& state, WalkKind kind, SeededStream& s, double rate_scale) {
  if (kind == WalkKind::exclusion_difference && state.position.is_origin()) {
    throw std::logic_error("exclusion difference process cannot sit at the origin");
  }
  StepOutcome out{state, 0.0};
  const double h = sample_exponential(s, total_jump_rate(state.position, kind) * rate_scale);
  out.holding_time = h;
  if (state.position.is_unit()) out.state.local_time_n0 += h;
  if (state.position.is_origin()) out.state.local_time_origin += h;
  out.state.clock += h;
  out.state.position = sample_jump(state.position, kind, s);
  return out;
}

Site uniform_start(int dim, SeededStream& s) {
  check_dimension(dim);
  return sample_uniform_neighbor(s, dim);
}

bool in_tracked_set(const Site& x, TrackedSet set) noexcept {
  const auto norm = x.l1_norm();
  return set == TrackedSet::neighbors ? norm == 1 : norm <= 1;
}

ExcursionSample sample_excursion(WalkKind kind, int dim, SeededStream& s) {
  ExcursionSample out;
  Site x = uniform_start(dim, s);
  if (kind == WalkKind::exclusion_difference) {
    while (x.is_unit()) {
      out.u_x += sample_exponential(s, total_jump_rate(x, kind));
      x = sample_jump(x, kind, s);
      if (x.is_origin()) throw std::logic_error("exclusion difference reached the origin");
    }
    return out;
  }
  while (x.l1_norm() <= 1) {
    const double h = sample_exponential(s, total_jump_rate(x, kind));
    (x.is_origin() ? out.u_y_0 : out.u_y_n0) += h;
    x = sample_jump(x, kind, s);
  }
  out.u_y = out.u_y_n0 + out.u_y_0;
  return out;
}

EstimateReport excursion_mean(WalkKind kind, ExcursionTarget target, int dim, std::uint64_t n_reps,
                              const SeededStream& s, unsigned workers) {
  check_dimension(dim);
  require_replications(n_reps);
  const bool wants_x = target == ExcursionTarget::u_x;
  if (wants_x != (kind == WalkKind::exclusion_difference)) {
    throw std::invalid_argument("U_X belongs to the exclusion difference; U_Y, U_Y_N0, U_Y_0 to the free walk");
  }
  auto acc = replicate(
      n_reps, workers, s, [] { return MeanAccumulator{}; },
      [&](std::uint64_t, SeededStream& rs, MeanAccumulator& a) {
        const auto e = sample_excursion(kind, dim, rs);
        switch (target) {
          case ExcursionTarget::u_x: a.add(e.u_x); break;
          case ExcursionTarget::u_y: a.add(e.u_y); break;
          case ExcursionTarget::u_y_n0: a.add(e.u_y_n0); break;
          case ExcursionTarget::u_y_0: a.add(e.u_y_0); break;
        }
      });
  auto r = acc.report();
  r.with("d", dim);
  return r;
}

namespace {

void check_horizons(std::span<const double> horizons, double rate_scale) {
  if (horizons.empty()) throw std::invalid_argument("local time needs at least one horizon");
  for (std::size_t i = 0; i < horizons.size(); ++i) {
    if (!(horizons[i] >= 0.0) || !std::isfinite(horizons[i])) {
      throw std::invalid_argument("horizons must be finite and nonnegative");
    }
    if (i && horizons[i] < horizons[i - 1]) throw std::invalid_argument("horizons must be nondecreasing");
  }
  if (!(rate_scale > 0.0)) throw std::invalid_argument("rate_scale must be positive");
}

// Occupation time of `set` up to each horizon along one path.
void local_time_path(WalkKind kind, TrackedSet set, std::span<const double> horizons, int dim, double rate_scale,
                     SeededStream& rs, std::vector<double>& out) {
  const std::size_t n_h = horizons.size();
  const double outside_rate = 4.0 * dim * rate_scale;
  out.assign(n_h, 0.0);
  Site x = uniform_start(dim, rs);
  double clock = 0.0;
  double local = 0.0;
  std::size_t next = 0;
  while (next < n_h) {
    if (in_tracked_set(x, set)) {
      const double h = -std::log(rs.uniform()) / (total_jump_rate(x, kind) * rate_scale);
      const double end = clock + h;
      while (next < n_h && horizons[next] <= end) {
        out[next] = local + horizons[next] - clock;
        ++next;
      }
      local += h;
      clock = end;
      x = sample_jump(x, kind, rs);
      continue;
    }
    // Outside the tracked set both walks jump at rate 4d independently of
    // the jump chain, so the time of k outside steps is Gamma(k, 4d).
    const int k = outside_chain(x, set, rs);
    std::gamma_distribution<double> gamma(static_cast<double>(k), 1.0);
    const double end = clock + gamma(rs) / outside_rate;
    while (next < n_h && horizons[next] <= end) {
      out[next] = local;
      ++next;
    }
    clock = end;
  }
}

}  // namespace

std::vector<EstimateReport> local_time_series(WalkKind kind, TrackedSet set, std::span<const double> horizons,
                                              int dim, std::uint64_t n_reps, const SeededStream& s,
                                              unsigned workers, double rate_scale) {
  check_dimension(dim);
  require_replications(n_reps);
  check_horizons(horizons, rate_scale);
  const std::size_t n_h = horizons.size();
  auto acc = replicate(
      n_reps, workers, s, [n_h] { return AccumulatorArray<MeanAccumulator>(n_h); },
      [&](std::uint64_t, SeededStream& rs, AccumulatorArray<MeanAccumulator>& a) {
        std::vector<double> path;
        local_time_path(kind, set, horizons, dim, rate_scale, rs, path);
        for (std::size_t i = 0; i < n_h; ++i) a[i].add(path[i]);
      });
  std::vector<EstimateReport> out;
  out.reserve(n_h);
  for (std::size_t i = 0; i < n_h; ++i) {
    auto r = acc[i].report();
    r.with("horizon", horizons[i]).with("d", dim);
    out.push_back(std::move(r));
  }
  return out;
}

EstimateReport local_time_log_slope(WalkKind kind, TrackedSet set, std::span<const double> horizons, int dim,
                                    std::uint64_t n_reps, const SeededStream& s, unsigned workers) {
  check_dimension(dim);
  require_replications(n_reps);
  check_horizons(horizons, 1.0);
  if (horizons.size() < 2 || horizons.front() <= 0.0 || horizons.front() == horizons.back()) {
    throw std::invalid_argument("slope needs at least two distinct positive horizons");
  }
  // Least-squares slope is linear in the responses: sum_i w_i L(t_i).
  const std::size_t n_h = horizons.size();
  std::vector<double> w(n_h);
  double xbar = 0.0;
  for (double t : horizons) xbar += std::log(t) / static_cast<double>(n_h);
  double sxx = 0.0;
  for (double t : horizons) sxx += (std::log(t) - xbar) * (std::log(t) - xbar);
  for (std::size_t i = 0; i < n_h; ++i) w[i] = (std::log(horizons[i]) - xbar) / sxx;
  auto acc = replicate(
      n_reps, workers, s, [] { return MeanAccumulator{}; },
      [&](std::uint64_t, SeededStream& rs, MeanAccumulator& a) {
        std::vector<double> path;
        local_time_path(kind, set, horizons, dim, 1.0, rs, path);
        double slope = 0.0;
        for (std::size_t i = 0; i < n_h; ++i) slope += w[i] * path[i];
        a.add(slope);
      });
  auto r = acc.report();
  r.with("d", dim).with("first_horizon", horizons.front()).with("last_horizon", horizons.back());
  return r;
}

EstimateReport local_time_estimate(WalkKind kind, TrackedSet set, double horizon, int dim, std::uint64_t n_reps,
                                   const SeededStream& s, unsigned workers, double rate_scale) {
  const double h[] = {horizon};
  return local_time_series(kind, set, h, dim, n_reps, s, workers, rate_scale).front();
}

namespace {

// Gauss-Legendre nodes and weights on [0, 1].
void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights) {
  nodes.assign(n, 0.0);
  weights.assign(n, 0.0);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      const double pn = n == 1 ? x : p1;
      const double pnm1 = n == 1 ? 1.0 : p0;
      dp = n * (x * pn - pnm1) / (x * x - 1.0);
      const double dx = pn / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    nodes[i] = 0.5 * (1.0 - x);
    nodes[n - 1 - i] = 0.5 * (1.0 + x);
    weights[i] = weights[n - 1 - i] = 0.5 * w;
  }
}

}  // namespace

double green_origin_d3_quadrature(int order) {
  if (order < 2) throw std::invalid_argument("quadrature order must be at least 2");
  // G = (2 pi)^-3 \int d^3k 1 / (1 - (c1 + c2 + c3) / 3). The k3 integral is
  // 3 / sqrt(b^2 - 1) with b = 3 - c1 - c2. Writing a = b - 1 =
  // 2 sin^2(k1/2) + 2 sin^2(k2/2) avoids cancellation near k = 0. By symmetry
  // G = (1/pi^2) \int_{[0,pi]^2}, and the two triangles k2 <= k1, k1 <= k2
  // contribute equally. On k2 <= k1 use k1 = pi s, k2 = pi s v.
  std::vector<double> x, w;
  gauss_legendre(order, x, w);
  const double pi = std::numbers::pi;
  double total = 0.0;
  for (int i = 0; i < order; ++i) {
    const double s = x[i];
    for (int j = 0; j < order; ++j) {
      const double v = x[j];
      const double h1 = std::sin(0.5 * pi * s);
      const double h2 = std::sin(0.5 * pi * s * v);
      const double a = 2.0 * h1 * h1 + 2.0 * h2 * h2;
      total += w[i] * w[j] * s * 3.0 / std::sqrt(a * (a + 2.0));
    }
  }
  return 2.0 * total;
}

double green_constant_d3() { return kGreenOriginD3; }

EstimateReport green_origin_d3_walk(std::uint64_t max_steps, std::uint64_t n_reps, const SeededStream& s,
                                    unsigned workers) {
  if (max_steps < 2) throw std::invalid_argument("max_steps must be at least 2");
  require_replications(n_reps);
  const Site origin = Site::origin(3);
  auto acc = replicate(
      n_reps, workers, s, [] { return MeanAccumulator{}; },
      [&](std::uint64_t, SeededStream& rs, MeanAccumulator& a) {
        Site x = origin;
        double visits = 1.0;
        for (std::uint64_t n = 1; n <= max_steps; ++n) {
          x = x.shifted(static_cast<int>(rs.below(6)));
          if (x == origin) visits += 1.0;
        }
        a.add(visits);
      });
  // Return probabilities after the last step: P[S_n = 0] ~ 2 (3 / (2 pi n))^(3/2) for even n.
  const double tail = 2.0 * std::pow(3.0 / (2.0 * std::numbers::pi), 1.5) / std::sqrt(static_cast<double>(max_steps));
  auto r = acc.report();
  r.mean += tail;
  r.with("max_steps", static_cast<double>(max_steps)).with("tail_correction", tail);
  return r;
}

std::vector<PairSnapshot> dual_pair_trace(int dim, double horizon, SeededStream& s) {
  check_dimension(dim);
  std::vector<PairSnapshot> trace;
  Site b = Site::origin(dim);
  Site a = sample_uniform_neighbor(s, dim);
  trace.push_back({0.0, a, b});

  struct Edge {
    Site from;  // occupied endpoint (A or B)
    Site to;
  };
  std::vector<Edge> edges;
  double t = 0.0;
  while (true) {
    edges.clear();
    for (int dir = 0; dir < num_directions(dim); ++dir) edges.push_back({a, a.shifted(dir)});
    for (int dir = 0; dir < num_directions(dim); ++dir) {
      const Site y = b.shifted(dir);
      if (y == a) continue;  // shared edge already listed from A
      edges.push_back({b, y});
    }
    t += sample_exponential(s, static_cast<double>(edges.size()));
    if (t > horizon) break;
    const Edge& e = edges[s.below(edges.size())];
    if ((e.from == a && e.to == b) || (e.from == b && e.to == a)) {
      std::swap(a, b);
    } else if (e.from == a) {
      a = e.to;
    } else {
      b = e.to;
    }
    if (a == b) throw std::logic_error("exclusion pair collocated");
    trace.push_back({t, a, b});
  }
  return trace;
}

const PairSnapshot& pair_state_at(std::span<const PairSnapshot> trace, double t) {
  if (trace.empty()) throw std::invalid_argument("empty trace");
  auto it = std::upper_bound(trace.begin(), trace.end(), t,
                             [](double value, const PairSnapshot& p) { return value < p.time; });
  if (it == trace.begin()) return trace.front();
  return *(it - 1);
}

}  // namespace cpstir
