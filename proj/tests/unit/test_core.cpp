#include <doctest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <numeric>
#include <vector>

#include "cpstir/distributions.hpp"
#include "cpstir/estimate.hpp"
#include "cpstir/lattice.hpp"
#include "cpstir/replicate.hpp"
#include "cpstir/rng.hpp"

using namespace cpstir;

TEST_CASE("streams replay bit-identically and separate by label") {
  SeededStream a(7, "clock"), b(7, "clock"), c(7, "mark");
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next_u64();
    CHECK(x == b.next_u64());
    differs = differs || x != c.next_u64();
  }
  CHECK(differs);
  CHECK(SeededStream(7).child(1).next_u64() != SeededStream(7).child("1").next_u64());
  CHECK(SeededStream(7).child(1).next_u64() == SeededStream(7).child(1).next_u64());

  SeededStream s(3);
  s.next_u64();
  SeededStream copy = s;
  CHECK(copy.next_u64() == s.next_u64());
}

TEST_CASE("distinct labels are uncorrelated") {
  constexpr int n = 100000;
  SeededStream a(11, "a"), b(11, "b");
  double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  for (int i = 0; i < n; ++i) {
    const double x = a.uniform(), y = b.uniform();
    sx += x, sy += y, sxx += x * x, syy += y * y, sxy += x * y;
  }
  const double cov = sxy / n - sx / n * sy / n;
  const double r = cov / std::sqrt((sxx / n - sx * sx / n / n) * (syy / n - sy * sy / n / n));
  CHECK(std::abs(r) < 4.0 / std::sqrt(n));
}

TEST_CASE("uniform stays in the open unit interval") {
  SeededStream s(5);
  for (int i = 0; i < 100000; ++i) {
    const double u = s.uniform();
    REQUIRE(u > 0.0);
    REQUIRE(u < 1.0);
  }
}

TEST_CASE("neighbour order and counts") {
  const auto n2 = neighbors(Site::origin(2));
  REQUIRE(n2.size() == 4);
  CHECK(n2[0] == Site{1, 0});
  CHECK(n2[1] == Site{-1, 0});
  CHECK(n2[2] == Site{0, 1});
  CHECK(n2[3] == Site{0, -1});
  CHECK(neighbors(Site::origin(3)).size() == 6);
  const Site x{5, -3};
  const auto shifted = neighbors(x);
  for (std::size_t i = 0; i < 4; ++i) CHECK(shifted[i] == x + n2[i]);
  for (int d = 0; d < 6; ++d) {
    CHECK(Site::unit(3, d).unit_direction() == d);
    CHECK(Site::unit(3, opposite(d)) == -Site::unit(3, d));
  }
  CHECK_THROWS_AS(check_dimension(4), std::invalid_argument);
}

TEST_CASE("exponential mean, survival function and scaling") {
  constexpr int n = 1000000;
  SeededStream s(1, "exp");
  MeanAccumulator mean, tail;
  for (int i = 0; i < n; ++i) {
    const double x = sample_exponential(s, 1.0);
    REQUIRE(x > 0.0);
    mean.add(x);
    tail.add(x > 1.0 ? 1.0 : 0.0);
  }
  CHECK(std::abs(mean.mean() - 1.0) < 3.0 * mean.std_error() + 1e-12);
  CHECK(std::abs(tail.mean() - std::exp(-1.0)) < 4.0 * tail.std_error());

  SeededStream a(2, "x"), b(2, "x");
  for (int i = 0; i < 100; ++i) CHECK(sample_exponential(a, 2.0) == doctest::Approx(0.5 * sample_exponential(b, 1.0)));
  CHECK_THROWS_AS(sample_exponential(a, 0.0), std::invalid_argument);
}

TEST_CASE("poisson points: count mean and variance") {
  constexpr int reps = 20000;
  const double rate = 3.0, window = 2.0;
  SeededStream s(4, "pp");
  MeanAccumulator count;
  for (int i = 0; i < reps; ++i) {
    const auto pts = sample_poisson_points(s, rate, window);
    REQUIRE(std::is_sorted(pts.begin(), pts.end()));
    if (!pts.empty()) REQUIRE(pts.back() <= window);
    count.add(static_cast<double>(pts.size()));
  }
  CHECK(std::abs(count.mean() - rate * window) < 3.0 * count.std_error());
  CHECK(count.variance() == doctest::Approx(rate * window).epsilon(0.05));
  CHECK(sample_poisson_points(s, rate, 0.0).empty());
}

TEST_CASE("direction frequencies and independence") {
  for (int dim : {2, 3}) {
    constexpr int n = 1000000;
    SeededStream s(9, "dir");
    std::vector<int> hits(2 * dim, 0);
    for (int i = 0; i < n; ++i) ++hits[sample_direction(s, dim)];
    const double p = 1.0 / (2 * dim);
    const double se = std::sqrt(p * (1 - p) / n);
    for (int h : hits) CHECK(std::abs(h / double(n) - p) < 3.5 * se);
  }
  // Chi-square independence of marks under two labels (16 cells, 9 dof).
  constexpr int n = 100000;
  SeededStream a(9, "alpha"), b(9, "beta");
  std::array<std::array<double, 4>, 4> table{};
  for (int i = 0; i < n; ++i) table[sample_direction(a, 2)][sample_direction(b, 2)] += 1;
  double chi2 = 0;
  for (auto& row : table)
    for (double c : row) chi2 += (c - n / 16.0) * (c - n / 16.0) / (n / 16.0);
  CHECK(chi2 < 27.9);  // 0.999 quantile of chi-square(9)
}

TEST_CASE("distribution specs parse, round-trip and sample") {
  for (const char* text : {"det:1", "exp:2.5", "pareto:0.5,1", "two:1,0.25,3"}) {
    CHECK(DistributionSpec::parse(text).to_string() == text);
  }
  CHECK_THROWS_AS(DistributionSpec::parse("det:-1"), std::invalid_argument);
  CHECK_THROWS_AS(DistributionSpec::parse("gauss:1"), std::invalid_argument);
  CHECK(std::isinf(DistributionSpec::pareto(0.5, 1).mean()));
  CHECK(std::isinf(DistributionSpec::pareto(1.0, 1).mean()));
  CHECK(DistributionSpec::pareto(3, 1).has_finite_second_moment());
  CHECK_FALSE(DistributionSpec::pareto(2, 1).has_finite_second_moment());

  SeededStream s(6, "dist");
  for (int i = 0; i < 100; ++i) CHECK(sample_distribution(DistributionSpec::deterministic(1), s) == 1.0);

  // Pareto(3, 1) mean a c / (a - 1) = 1.5, cross-checked by integrating the density.
  const double shape = 3.0;
  double integral = 0;
  const int steps = 200000;
  for (int i = 0; i < steps; ++i) {
    const double u = (i + 0.5) / steps;  // x = u^(-1/shape) maps (0,1) onto (1,inf)
    integral += std::pow(u, -1.0 / shape) / steps;
  }
  CHECK(integral == doctest::Approx(1.5).epsilon(1e-3));
  MeanAccumulator m;
  for (int i = 0; i < 1000000; ++i) {
    const double x = sample_distribution(DistributionSpec::pareto(shape, 1), s);
    REQUIRE(x >= 1.0);
    m.add(x);
  }
  CHECK(std::abs(m.mean() - 1.5) < 4.0 * m.std_error());

  MeanAccumulator e, two;
  for (int i = 0; i < 100000; ++i) {
    e.add(sample_distribution(DistributionSpec::exponential(1), s));
    two.add(sample_distribution(DistributionSpec::two_point(1, 0.25, 3), s));
  }
  CHECK(std::abs(e.mean() - 1.0) < 4.0 * e.std_error());
  CHECK(std::abs(two.mean() - 2.5) < 4.0 * two.std_error());
}

TEST_CASE("mean accumulator matches direct formulas and merges in order") {
  const std::vector<double> xs{1.5, 2.0, -0.5, 4.0, 3.25, 0.0, 7.0};
  MeanAccumulator all, left, right;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    all.add(xs[i]);
    (i < 3 ? left : right).add(xs[i]);
  }
  const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
  double ss = 0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  CHECK(all.mean() == doctest::Approx(mean));
  CHECK(all.variance() == doctest::Approx(ss / (xs.size() - 1)));
  CHECK(all.std_error() == doctest::Approx(std::sqrt(ss / (xs.size() - 1) / xs.size())));
  left.merge(right);
  CHECK(left.mean() == doctest::Approx(all.mean()));
  CHECK(left.variance() == doctest::Approx(all.variance()));
  CHECK_THROWS(MeanAccumulator{}.report());
}

TEST_CASE("ratio accumulator: exact ratio and delta-method error") {
  RatioAccumulator r;
  const std::vector<double> x{1, 2, 3, 4, 5}, y{2, 2, 5, 3, 6};
  for (std::size_t i = 0; i < x.size(); ++i) r.add(x[i], y[i]);
  const auto rep = r.report();
  const double mx = 3.0, my = 3.6, ratio = mx / my;
  double vx = 0, vy = 0, cxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    vx += (x[i] - mx) * (x[i] - mx) / 4;
    vy += (y[i] - my) * (y[i] - my) / 4;
    cxy += (x[i] - mx) * (y[i] - my) / 4;
  }
  const double var = (vx - 2 * ratio * cxy + ratio * ratio * vy) / (my * my) / 5;
  CHECK(rep.mean == doctest::Approx(ratio));
  CHECK(rep.std_error == doctest::Approx(std::sqrt(var)));

  RatioAccumulator same;
  for (double v : x) same.add(v, v);
  CHECK(same.report().mean == 1.0);
  CHECK(same.report().std_error == doctest::Approx(0.0));
}

TEST_CASE("replicate is independent of worker count") {
  auto run = [](unsigned workers) {
    return replicate(
        5000, workers, SeededStream(42, "rep"), [] { return MeanAccumulator{}; },
        [](std::uint64_t, SeededStream& s, MeanAccumulator& a) { a.add(sample_exponential(s, 1.0)); });
  };
  const auto one = run(1), four = run(4);
  CHECK(one.mean() == four.mean());
  CHECK(one.variance() == four.variance());
  CHECK(one.count() == 5000);
}
