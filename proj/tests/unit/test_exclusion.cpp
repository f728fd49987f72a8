#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <map>
#include <numbers>
#include <vector>

#include "cpstir/estimate.hpp"
#include "cpstir/exclusion_pair.hpp"
#include "cpstir/rng.hpp"

using namespace cpstir;

namespace {

// G(0,0) on Z^3 from the exact return probabilities
// P[S_2n = 0] = 6^-2n C(2n,n) sum_{i+j+k=n} (n! / (i! j! k!))^2
// plus the asymptotic tail 2 (3 / (2 pi n))^(3/2) summed over even n > 2 n_max.
double green_series(int n_max) {
  double g = 1.0;
  for (int n = 1; n <= n_max; ++n) {
    const double lf = std::lgamma(n + 1.0);
    const double base = std::lgamma(2.0 * n + 1.0) - 2.0 * lf - 2.0 * n * std::log(6.0);
    double inner = 0.0;
    for (int i = 0; i <= n; ++i) {
      for (int j = 0; i + j <= n; ++j) {
        const int k = n - i - j;
        inner += std::exp(base + 2.0 * (lf - std::lgamma(i + 1.0) - std::lgamma(j + 1.0) - std::lgamma(k + 1.0)));
      }
    }
    g += inner;
  }
  const double c = 2.0 * std::pow(3.0 / (2.0 * std::numbers::pi), 1.5);
  return g + c / std::sqrt(2.0 * n_max + 1.0);
}

// P[Y_t = z | Y_0 = e_1] for the free walk: each coordinate is an independent
// rate-4 symmetric walk, P[k steps net] = e^{-4t} I_|k|(4t).
double free_walk_kernel(const Site& z, double t) {
  double p = 1.0;
  for (int a = 0; a < z.dim(); ++a) {
    const auto k = std::abs(z[a] - (a == 0 ? 1 : 0));
    p *= std::exp(-4.0 * t) * std::cyl_bessel_i(static_cast<double>(k), 4.0 * t);
  }
  return p;
}

double simpson(double (*f)(double, int), double t, int d, int steps = 2000) {
  const double h = t / steps;
  double acc = f(0, d) + f(t, d);
  for (int i = 1; i < steps; ++i) acc += (i % 2 ? 4.0 : 2.0) * f(i * h, d);
  return acc * h / 3.0;
}

double prob_in_n0(double t, int d) {
  double p = 0;
  for (const auto& z : neighbors(Site::origin(d))) p += free_walk_kernel(z, t);
  return p;
}

double prob_at_origin(double t, int d) { return free_walk_kernel(Site::origin(d), t); }

}  // namespace

TEST_CASE("green constant: quadrature, exact series and walk simulation agree") {
  const double g64 = green_origin_d3_quadrature(64);
  CHECK(g64 == doctest::Approx(kGreenOriginD3).epsilon(1e-12));
  CHECK(green_origin_d3_quadrature(96) == doctest::Approx(kGreenOriginD3).epsilon(1e-12));
  CHECK(green_series(400) == doctest::Approx(kGreenOriginD3).epsilon(1e-3));
  CHECK(green_constant_d3() > 1.0);
  CHECK(local_time_limit_d3() == doctest::Approx(0.2582).epsilon(1e-3));

  const auto walk = green_origin_d3_walk(2000, 20000, SeededStream(3, "green"));
  CHECK(std::abs(walk.mean - kGreenOriginD3) < 4.0 * walk.std_error + 0.002);
}

TEST_CASE("generator rates") {
  const Site e1{1, 0};
  CHECK(total_jump_rate(e1, WalkKind::exclusion_difference) == 7.0);
  CHECK(total_jump_rate(e1, WalkKind::free_difference) == 8.0);
  CHECK(total_jump_rate(Site{2, 2}, WalkKind::exclusion_difference) == 8.0);

  SeededStream s(1, "jumps");
  std::map<std::pair<long, long>, int> hits;
  constexpr int n = 700000;
  for (int i = 0; i < n; ++i) {
    const Site y = sample_jump(e1, WalkKind::exclusion_difference, s);
    REQUIRE_FALSE(y.is_origin());
    ++hits[{static_cast<long>(y[0]), static_cast<long>(y[1])}];
  }
  const std::map<std::pair<long, long>, double> want{{{-1, 0}, 1.0 / 7}, {{1, 1}, 2.0 / 7}, {{1, -1}, 2.0 / 7},
                                                     {{2, 0}, 2.0 / 7}};
  CHECK(hits.size() == want.size());
  for (const auto& [z, p] : want) {
    CHECK(std::abs(hits[z] / double(n) - p) < 4.0 * std::sqrt(p * (1 - p) / n));
  }

  // Off N_0 both walks step uniformly to the four neighbours.
  std::map<std::pair<long, long>, int> off;
  for (int i = 0; i < 100000; ++i) {
    const Site y = sample_jump(Site{2, 2}, WalkKind::exclusion_difference, s);
    ++off[{static_cast<long>(y[0]), static_cast<long>(y[1])}];
  }
  CHECK(off.size() == 4);
  for (const auto& [z, c] : off) CHECK(std::abs(c / 1e5 - 0.25) < 4.0 * std::sqrt(0.25 * 0.75 / 1e5));

  DifferenceState at_origin;
  at_origin.position = Site::origin(2);
  CHECK_THROWS_AS(step(at_origin, WalkKind::exclusion_difference, s), std::logic_error);
}

TEST_CASE("excursion means") {
  const SeededStream s(5, "excursion");
  for (int d : {2, 3}) {
    // X leaves N_0 at every jump except the swap, so its exit rate is 4d - 2.
    const auto ux = excursion_mean(WalkKind::exclusion_difference, ExcursionTarget::u_x, d, 200000, s.child(d));
    CHECK(std::abs(ux.mean - 1.0 / (4 * d - 2)) < 4.0 * ux.std_error);
  }
  const auto uy = excursion_mean(WalkKind::free_difference, ExcursionTarget::u_y, 2, 200000, s.child("y"));
  const auto uy_n0 = excursion_mean(WalkKind::free_difference, ExcursionTarget::u_y_n0, 2, 200000, s.child("y"));
  const auto uy_0 = excursion_mean(WalkKind::free_difference, ExcursionTarget::u_y_0, 2, 200000, s.child("y"));
  CHECK(std::abs(uy.mean - 5.0 / 24.0) < 4.0 * uy.std_error);
  // Same replications, so the split is exact.
  CHECK(uy_n0.mean + uy_0.mean == doctest::Approx(uy.mean).epsilon(1e-12));
  const auto ux = excursion_mean(WalkKind::exclusion_difference, ExcursionTarget::u_x, 2, 200000, s.child("x2"));
  CHECK(std::abs(ux.mean - uy_n0.mean) < 4.0 * std::hypot(ux.std_error, uy_n0.std_error));
  CHECK_THROWS_AS(excursion_mean(WalkKind::free_difference, ExcursionTarget::u_x, 2, 10, s), std::invalid_argument);
}

TEST_CASE("free-walk local times match the Bessel kernel") {
  const double t = 5.0;
  const double horizons[] = {t};
  const auto s = SeededStream(8, "bessel");
  const auto n0 = local_time_series(WalkKind::free_difference, TrackedSet::neighbors, horizons, 2, 40000, s).front();
  const auto closed =
      local_time_series(WalkKind::free_difference, TrackedSet::closed_neighbors, horizons, 2, 40000, s).front();
  const double want_n0 = simpson(prob_in_n0, t, 2);
  const double want_closed = want_n0 + simpson(prob_at_origin, t, 2);
  CHECK(std::abs(n0.mean - want_n0) < 4.0 * n0.std_error);
  CHECK(std::abs(closed.mean - want_closed) < 4.0 * closed.std_error);
}

TEST_CASE("local time: zero horizon, monotone series, time change") {
  const auto s = SeededStream(9, "local");
  CHECK(local_time_estimate(WalkKind::exclusion_difference, TrackedSet::neighbors, 0.0, 2, 100, s).mean == 0.0);
  const double horizons[] = {1, 10, 100, 1000};
  const auto series = local_time_series(WalkKind::exclusion_difference, TrackedSet::neighbors, horizons, 2, 2000, s);
  for (std::size_t i = 1; i < series.size(); ++i) CHECK(series[i].mean >= series[i - 1].mean);

  // Rates scaled by N over [0, t] against rate 1 over [0, N t], rescaled.
  const double n = 10.0;
  const auto fast = local_time_estimate(WalkKind::exclusion_difference, TrackedSet::neighbors, 20.0, 2, 4000,
                                        s.child("tc"), 1, n);
  const auto slow = local_time_estimate(WalkKind::exclusion_difference, TrackedSet::neighbors, 200.0, 2, 4000,
                                        s.child("tc"), 1, 1.0);
  CHECK(fast.mean == doctest::Approx(slow.mean / n).epsilon(1e-9));
}

TEST_CASE("pair simulation matches the difference generator") {
  // Two-sample comparison of |A_t - B_t|_1 against |X_t|_1 at t = 5.
  const double t = 5.0;
  constexpr int reps = 100000;
  const SeededStream s(10, "pair");
  std::map<long, double> pair_hist, diff_hist;
  for (int i = 0; i < reps; ++i) {
    SeededStream ps = s.child("pair").child(static_cast<std::uint64_t>(i));
    const auto trace = dual_pair_trace(2, t, ps);
    const auto& last = pair_state_at(trace, t);
    const Site gap = last.a - last.b;
    REQUIRE_FALSE(gap.is_origin());
    pair_hist[static_cast<long>(gap.l1_norm())] += 1;

    SeededStream ds = s.child("diff").child(static_cast<std::uint64_t>(i));
    DifferenceState st;
    st.position = uniform_start(2, ds);
    while (true) {
      const auto next = step(st, WalkKind::exclusion_difference, ds);
      if (next.state.clock > t) break;
      st = next.state;
      REQUIRE_FALSE(st.position.is_origin());
    }
    diff_hist[static_cast<long>(st.position.l1_norm())] += 1;
  }
  // Chi-square two-sample statistic over cells with enough mass.
  double chi2 = 0;
  int cells = 0;
  for (long k = 1; k < 40; ++k) {
    const double a = pair_hist[k], b = diff_hist[k];
    if (a + b < 20) continue;
    chi2 += (a - b) * (a - b) / (a + b);
    ++cells;
  }
  // Mean + 5 sd of chi-square(cells - 1).
  CHECK(chi2 < (cells - 1) + 5.0 * std::sqrt(2.0 * (cells - 1)));
}

TEST_CASE("swap events keep the pair as a set") {
  SeededStream s(12, "swap");
  const auto trace = dual_pair_trace(2, 50.0, s);
  int swaps = 0;
  for (std::size_t i = 1; i < trace.size(); ++i) {
    const auto& p = trace[i - 1];
    const auto& q = trace[i];
    if (q.a == p.b && q.b == p.a) ++swaps;
    CHECK_FALSE(q.a == q.b);
  }
  CHECK(swaps > 0);
}

TEST_CASE("log-slope estimator reports horizons") {
  const double horizons[] = {10, 100, 1000};
  const auto r = local_time_log_slope(WalkKind::free_difference, TrackedSet::neighbors, horizons, 2, 500,
                                      SeededStream(13, "slope"));
  CHECK(r.extra_value("first_horizon").value() == 10.0);
  CHECK(r.mean > 0.0);
  const double bad[] = {0.0, 10.0};
  CHECK_THROWS_AS(local_time_log_slope(WalkKind::free_difference, TrackedSet::neighbors, bad, 2, 10,
                                       SeededStream(13)),
                  std::invalid_argument);
}
