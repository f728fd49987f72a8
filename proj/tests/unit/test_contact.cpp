#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <numbers>
#include <set>

#include "cpstir/contact_process.hpp"
#include "cpstir/exclusion_pair.hpp"
#include "cpstir/rng.hpp"

using namespace cpstir;

TEST_CASE("edge and rate bookkeeping after every event") {
  ContactProcess cp({2.0, 3.0, 2});
  SeededStream s(1, "book");
  for (int i = 0; i < 5000 && !cp.empty(); ++i) {
    cp.step(s);
    const auto [mixed, full] = cp.recount_edges();
    REQUIRE(mixed == cp.mixed_edges());
    REQUIRE(mixed + full == cp.active_edges());
    const double n = static_cast<double>(cp.size());
    REQUIRE(cp.total_rate() == doctest::Approx(n * 3.0 + 3.0 * static_cast<double>(mixed + full)));
    REQUIRE(cp.effective_rate() == doctest::Approx(n * 3.0 + 3.0 * static_cast<double>(mixed)));
    std::set<std::string> seen;
    for (const auto& x : cp.sites()) REQUIRE(seen.insert(x.to_string()).second);
  }
  ContactProcess dead({1.0, 0.0, 2}, {});
  CHECK_THROWS_AS(dead.step(s), std::logic_error);
}

TEST_CASE("a lone particle without births") {
  MeanAccumulator life;
  for (std::uint64_t i = 0; i < 40000; ++i) {
    ContactProcess cp({0.0, 0.0, 2});
    SeededStream s = SeededStream(2, "life").child(i);
    cp.step(s);
    CHECK(cp.empty());
    life.add(cp.time());
  }
  CHECK(std::abs(life.mean() - 1.0) < 4.0 * life.std_error());

  const auto r = survival_probability({0.0, 5.0, 2}, 1.0, 1000, 40000, SeededStream(2, "surv"));
  CHECK(std::abs(r.mean - std::exp(-1.0)) < 4.0 * r.std_error);
  const auto never = survival_probability({0.0, 0.0, 2}, 10.0, 1000, 2000, SeededStream(2, "ten"));
  CHECK(never.mean < 0.005);
}

TEST_CASE("a lone stirred particle moves as a rate-2dN walk") {
  const double n_rate = 1.5, t = 2.0;
  MeanAccumulator sq;
  for (std::uint64_t i = 0; i < 20000; ++i) {
    ContactProcess cp({0.0, n_rate, 2});
    SeededStream s = SeededStream(3, "walk").child(i);
    // Condition on survival to t by discarding runs that die first.
    cp.run_until(t, s);
    if (cp.empty()) continue;
    const Site x = cp.sites().front();
    sq.add(static_cast<double>(x[0] * x[0] + x[1] * x[1]));
  }
  CHECK(std::abs(sq.mean() - 4.0 * n_rate * t) < 4.0 * sq.std_error());
}

TEST_CASE("a ring on a fully occupied edge leaves the set unchanged") {
  ContactProcess cp({0.0, 1.0, 1}, {Site{0}, Site{1}});
  CHECK(cp.active_edges() == 3);
  CHECK(cp.mixed_edges() == 2);
  CHECK(cp.total_rate() > cp.effective_rate());
}

TEST_CASE("survival grows with lambda and is supercritical far above the window") {
  const ContactOptions lo{1.2, 0.0, 2}, hi{2.5, 0.0, 2};
  const auto a = survival_probability(lo, 20.0, 2000, 1000, SeededStream(4, "mono"));
  const auto b = survival_probability(hi, 20.0, 2000, 1000, SeededStream(4, "mono"));
  CHECK(b.mean >= a.mean);
  const auto strong = survival_probability({5.0, 0.0, 2}, 20.0, 2000, 500, SeededStream(4, "five"));
  CHECK(strong.mean > 0.3);
}

TEST_CASE("lambda_c proxy search") {
  LambdaCSearch q;
  q.cap = 200;
  q.horizon = 20.0;
  q.tol = 0.1;
  q.lower = 0.8;
  q.upper = 3.0;
  q.reps_per_probe = 600;
  q.threshold = 0.0;
  const auto degenerate = estimate_lambda_c(q, SeededStream(5, "lc"));
  CHECK(degenerate.lower == q.lower);
  CHECK(degenerate.upper == q.lower);

  q.threshold = 0.05;
  const auto iv = estimate_lambda_c(q, SeededStream(5, "lc"));
  CHECK(iv.upper - iv.lower <= q.tol + 1e-12);
  CHECK(iv.lower >= 0.8);
  CHECK(iv.upper <= 3.0);
  CHECK_FALSE(iv.probes.empty());
  q.lower = 2.9;
  q.upper = 3.0;
  CHECK_THROWS_AS(estimate_lambda_c(q, SeededStream(5, "lc")), std::invalid_argument);
}

TEST_CASE("asymptotic lower bounds") {
  CHECK(asymptotic_lower_bound(3, 100.0) == doctest::Approx(1.0 + (kGreenOriginD3 - 1.0) / 600.0));
  CHECK(asymptotic_lower_bound(3, 100.0) == doctest::Approx(1.000861).epsilon(1e-6));
  const double e2 = std::exp(2.0);
  CHECK(asymptotic_lower_bound(2, e2) == doctest::Approx(1.0 + 2.0 / (4.0 * std::numbers::pi * e2)));
  CHECK(asymptotic_lower_bound(2, e2) == doctest::Approx(1.02154).epsilon(1e-5));
  CHECK(asymptotic_lower_bound(2, 1e9) - 1.0 < 1e-7);
  CHECK(asymptotic_lower_bound(3, 1e9) - 1.0 < 1e-9);
}
