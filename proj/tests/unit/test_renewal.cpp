#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "cpstir/renewal.hpp"
#include "cpstir/rng.hpp"

using namespace cpstir;

namespace {

const auto kDet1 = DistributionSpec::deterministic(1);
const auto kExp1 = DistributionSpec::exponential(1);
const auto kPareto = DistributionSpec::pareto(0.5, 1);

}  // namespace

TEST_CASE("alternating unit blocks") {
  LazySequence u(kDet1, SeededStream(1, "u")), v(kDet1, SeededStream(1, "v"));
  const auto p = build_path(10.0, u, v);
  CHECK(p.kappa == doctest::Approx(5.0));
  CHECK(p.n_t == 5);
  const auto q = build_path(10.5, u, v);
  CHECK(q.kappa == doctest::Approx(5.5));
  CHECK(q.n_t == 5);
}

TEST_CASE("horizon before the first u-block ends") {
  LazySequence u(DistributionSpec::deterministic(3), SeededStream(2, "u")), v(kPareto, SeededStream(2, "v"));
  const auto p = build_path(2.0, u, v);
  CHECK(p.kappa == 2.0);
  CHECK(p.n_t == 0);
}

TEST_CASE("path identities hold per realization") {
  const RenewalSpec spec{kDet1, kExp1, kPareto};
  for (std::uint64_t i = 0; i < 300; ++i) {
    const double t = 1e4;
    const auto pair = simulate_pair(spec, t, SeededStream(3, "paths").child(i));
    for (const auto* path : {&pair.first, &pair.second}) {
      REQUIRE(path->kappa <= t);
      REQUIRE(path->kappa >= 0.0);
      CHECK(path->kappa_from_u_blocks() == doctest::Approx(path->kappa).epsilon(1e-12));
      CHECK(path->kappa_from_v_blocks() == doctest::Approx(path->kappa).epsilon(1e-9));
      CHECK(path->count_renewals() == path->n_t);
      const auto n = static_cast<std::size_t>(path->n_t);
      REQUIRE(path->s_points.size() >= 2 * n + 1);
      CHECK(path->s_points[2 * n] <= t);
      CHECK(path->s_points.back() > t);
    }
    // |kappa - alpha N_t| <= alpha for deterministic U = alpha.
    CHECK(std::abs(pair.first.kappa - static_cast<double>(pair.first.n_t)) <= 1.0 + 1e-9);
    // Shared V: path 2 reads the same V values as path 1.
    const auto common = std::min(pair.v1.size(), pair.v2.size());
    for (std::size_t k = 0; k < common; ++k) REQUIRE(pair.v1[k] == pair.v2[k]);
  }
}

TEST_CASE("lazy sequences are index-stable") {
  LazySequence a(kExp1, SeededStream(4, "lazy")), b(kExp1, SeededStream(4, "lazy"));
  const double late = a[50];
  for (std::size_t i = 0; i <= 50; ++i) b[i];
  CHECK(b[50] == late);
  CHECK(a[3] == b[3]);
}

TEST_CASE("monotone coupling for deterministic blocks") {
  const RenewalSpec spec{DistributionSpec::deterministic(2), kDet1, kPareto};
  for (std::uint64_t i = 0; i < 200; ++i) {
    const auto pair = simulate_pair(spec, 1e4, SeededStream(5, "mono").child(i));
    CHECK(pair.second.n_t >= pair.first.n_t);
    CHECK(std::abs(pair.first.kappa - 2.0 * static_cast<double>(pair.first.n_t)) <= 2.0 + 1e-9);
  }
}

TEST_CASE("ratio of identical coupled paths is exactly one") {
  const RenewalSpec spec{kExp1, kExp1, kPareto};
  PairOptions o;
  o.common_u = true;
  const auto r = kappa_ratio(spec, 1e4, 200, SeededStream(6, "same"), 1, o);
  CHECK(r.mean == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r.std_error < 1e-9);
}

TEST_CASE("ratio with deterministic blocks at a moderate horizon") {
  const RenewalSpec spec{DistributionSpec::deterministic(2), kDet1, kPareto};
  const auto r = kappa_ratio(spec, 1e5, 2000, SeededStream(7, "lemma"));
  CHECK(r.mean > 1.7);
  CHECK(r.mean < 2.0);
  const RenewalSpec finite{kDet1, kExp1, kExp1};
  const auto f = kappa_ratio(finite, 100, 50, SeededStream(7, "finite"));
  CHECK_FALSE(f.notes.empty());
}

TEST_CASE("delta_m from its definition") {
  const std::vector<double> ones{1, 1, 1}, u2{0.5, 2, 0.25};
  CHECK(delta_m(ones, u2, 0) == doctest::Approx(1.0));   // max(1, 0.5)
  CHECK(delta_m(ones, u2, 1) == doctest::Approx(1.5));   // windows [1,2] and [0.5,2.5]
  CHECK(delta_m(ones, u2, 2) == doctest::Approx(0.75));  // windows [2,3] and [2.5,2.75]
  const std::vector<double> big{3.0};
  CHECK(delta_m(ones, big, 0) == doctest::Approx(3.0));
  const auto seq = delta_sequence(ones, u2, 2);
  REQUIRE(seq.size() == 3);
  for (std::size_t m = 0; m < 3; ++m) CHECK(seq[m] == doctest::Approx(delta_m(ones, u2, m)));
  const auto flat = delta_sequence(ones, ones, 2);
  for (double d : flat) CHECK(d <= 1.0 + 1e-12);
}

TEST_CASE("delta max statistic") {
  const auto s = SeededStream(8, "delta");
  const auto zero = delta_max_statistic(DistributionSpec::exponential(1), 0, 20000, s);
  // k = 0: Delta_0 = max(1, U2_0), E = 1 + e^{-1}.
  CHECK(std::abs(zero.mean - (1.0 + std::exp(-1.0))) < 4.0 * zero.std_error);
  const auto det = delta_max_statistic(kDet1, 50, 100, s);
  CHECK(det.mean <= 1.0 + 1e-12);
  double prev = 1e300;
  for (std::uint64_t k : {100, 1000, 10000}) {
    const auto r = delta_max_statistic(kExp1, k, 300, s.child(k));
    const double scaled = r.mean / std::pow(static_cast<double>(k), 0.75);
    CHECK(scaled < 3.0);
    CHECK(scaled <= prev * 1.2);
    prev = scaled;
  }
  CHECK_THROWS_AS(delta_max_statistic(DistributionSpec::exponential(2), 10, 10, s), std::invalid_argument);
  CHECK_THROWS_AS(delta_max_statistic(DistributionSpec::pareto(2, 0.5), 10, 10, s), std::invalid_argument);
}

TEST_CASE("N_t / t decreases under heavy-tailed V and is 1/2 for unit blocks") {
  const double horizons[] = {1e2, 1e3, 1e4, 1e5, 1e6};
  const auto heavy = n_t_sublinearity({kDet1, kDet1, kPareto}, horizons, 400, SeededStream(9, "nt"));
  for (std::size_t i = 1; i < heavy.size(); ++i) CHECK(heavy[i].mean < heavy[i - 1].mean);
  CHECK(heavy.back().mean * 1e6 > heavy.front().mean * 1e2);  // N_t grows
  const double grid[] = {1e3};
  const auto unit = n_t_sublinearity({kDet1, kDet1, kDet1}, grid, 10, SeededStream(9, "unit"));
  CHECK(unit.front().mean == doctest::Approx(0.5).epsilon(1e-3));
}

TEST_CASE("kappa difference bound") {
  const auto r = kappa_difference_bound_check({kDet1, kExp1, kPareto}, 1e3, 2000, SeededStream(10, "bound"));
  CHECK(r.paths == 2000);
  CHECK(r.violations == 0);
  const auto det = kappa_difference_bound_check({kDet1, kDet1, kPareto}, 1e3, 200, SeededStream(10, "det"));
  CHECK(det.violations == 0);
  const auto early = kappa_difference_bound_check({kDet1, kDet1, kPareto}, 0.5, 10, SeededStream(10, "early"));
  CHECK(early.violations == 0);
  CHECK_THROWS_AS(kappa_difference_bound_check({kExp1, kDet1, kPareto}, 10, 10, SeededStream(10)),
                  std::invalid_argument);
}
