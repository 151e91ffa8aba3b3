#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "qhd/core_model.hpp"

using namespace qhd;

namespace {

Preferences prefs(double beta, double delta, double alpha, double omega = 10.0) {
  return {beta, delta, alpha, omega};
}

struct Draw {
  Preferences p;
  double rate;
  DecisionDay day;
};

std::vector<Draw> random_draws(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> beta(0.3, 1.3), delta(0.95, 1.0), alpha(1.05, 3.0),
      omega(1.0, 100.0);
  const RateSchedule sched;
  std::vector<Draw> out;
  for (std::size_t i = 0; i < n; ++i) {
    const Preferences p{beta(rng), delta(rng), alpha(rng), omega(rng)};
    const double r = sched.rates[rng() % sched.size()];
    out.push_back({p, r, (rng() & 1u) ? DecisionDay::two : DecisionDay::zero});
  }
  return out;
}

} // namespace

TEST_CASE("rate schedule defaults") {
  const RateSchedule s;
  CHECK(s.rates == std::vector<double>{1.25, 0.75, 1.0, 1.5, 0.5});
  CHECK(s.budget == 360.0);
  CHECK(s.delay_days == 7);
  CHECK(s.certain_rate_index() == 0);
  CHECK(s.index_of(1.5) == 3);
  CHECK_THROWS_AS(s.index_of(2.0), std::out_of_range);
  RateSchedule bad;
  bad.rates = {1.0, -0.5};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad.rates = {1.0};
  bad.budget = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("preferences are validated") {
  CHECK_NOTHROW(prefs(1.0, 1.0, 1.5).validate());
  CHECK_THROWS_AS(prefs(0.0, 1.0, 1.5).validate(), std::invalid_argument);
  CHECK_THROWS_AS(prefs(1.0, 1.01, 1.5).validate(), std::invalid_argument);
  CHECK_THROWS_AS(prefs(1.0, 0.0, 1.5).validate(), std::invalid_argument);
  CHECK_THROWS_AS(prefs(1.0, 1.0, 1.0).validate(), std::invalid_argument);
  CHECK_THROWS_AS(prefs(1.0, 1.0, 1.5, 0.0).validate(), std::invalid_argument);
  CHECK_THROWS_AS(optimal_allocation(prefs(1.0, 1.0, 0.9), 1.0, DecisionDay::zero), std::invalid_argument);
  CHECK_THROWS_AS(optimal_allocation(prefs(1.0, 1.0, 1.5), 0.0, DecisionDay::zero), std::invalid_argument);
}

TEST_CASE("no discounting at R = 1 splits the budget evenly") {
  const Allocation a = optimal_allocation(prefs(1.0, 1.0, 1.282), 1.0, DecisionDay::zero);
  CHECK(a.e2 == doctest::Approx(180.0).epsilon(1e-12));
  CHECK(a.e9 == doctest::Approx(180.0).epsilon(1e-12));
  CHECK(a.censored == Censoring::interior);
}

TEST_CASE("closed form agrees with numerical minimization at the reference point") {
  const Allocation a = optimal_allocation(prefs(1.0, 0.986, 1.282), 1.0, DecisionDay::zero);
  const double ref = oracle::optimal_e2(1.0, 0.986, 1.282, 10.0, 1.0, false);
  CHECK(std::abs(a.e2 - ref) < 1e-6);
  CHECK(a.e2 == doctest::Approx(147.1).epsilon(1e-3));
  CHECK(a.e9 == doctest::Approx(212.9).epsilon(1e-3));
  CHECK(a.censored == Censoring::interior);

  const Allocation b = optimal_allocation(prefs(0.581, 0.986, 1.282), 1.25, DecisionDay::two);
  const double ref_b = oracle::optimal_e2(0.581, 0.986, 1.282, 10.0, 1.25, true);
  CHECK(std::abs(b.e2 - ref_b) < 1e-6);
  CHECK(b.e2 == doctest::Approx(3.7).epsilon(0.05));
  CHECK(b.censored == Censoring::interior);
}

TEST_CASE("closed form agrees with numerical minimization over random draws") {
  double worst = 0.0;
  for (const Draw& d : random_draws(1000, 7)) {
    const Allocation a = optimal_allocation(d.p, d.rate, d.day);
    const double ref = oracle::optimal_e2(d.p.beta, d.p.delta, d.p.alpha, d.p.omega, d.rate,
                                          d.day == DecisionDay::two);
    worst = std::max(worst, std::abs(a.e2 - ref));
  }
  CHECK(worst < 1e-6);
}

TEST_CASE("allocations satisfy the budget identity and the Euler condition") {
  for (const Draw& d : random_draws(1000, 11)) {
    const Allocation a = optimal_allocation(d.p, d.rate, d.day);
    CHECK(std::abs(a.e2 + d.rate * a.e9 - 360.0) < 1e-9);
    CHECK(a.e2 >= 0.0);
    CHECK(a.e2 <= 360.0);
    CHECK((a.censored == Censoring::at_lower) == (a.e2 == 0.0));
    CHECK((a.censored == Censoring::at_upper) == (a.e2 == 360.0));
    if (a.censored != Censoring::interior) continue;
    const double lhs = std::pow((a.e2 + d.p.omega) / (a.e9 + d.p.omega), d.p.alpha - 1.0);
    const double rhs = (d.day == DecisionDay::two ? d.p.beta : 1.0) * std::pow(d.p.delta, 7) / d.rate;
    CHECK(std::abs(lhs - rhs) < 1e-9);
  }
}

TEST_CASE("comparative statics") {
  const RateSchedule sched;
  for (const Draw& d : random_draws(300, 13)) {
    Preferences lo = d.p, hi = d.p;
    lo.beta = 0.5 * d.p.beta;
    hi.beta = d.p.beta;
    // Day-zero choices do not depend on beta at all.
    const Allocation z_lo = optimal_allocation(lo, d.rate, DecisionDay::zero);
    const Allocation z_hi = optimal_allocation(hi, d.rate, DecisionDay::zero);
    CHECK(z_lo.e2 == z_hi.e2);
    CHECK(z_lo.e9 == z_hi.e9);
    // Lower beta on day two pushes work away from the present.
    CHECK(optimal_allocation(lo, d.rate, DecisionDay::two).e2 <=
          optimal_allocation(hi, d.rate, DecisionDay::two).e2);

    // Day-two effort never rises with the rate: the Euler ratio falls in R, and
    // at a fixed ratio e2 = (X B + X w R - w R)/(R + X) has dR-derivative
    // X (X w - w - B) / (R + X)^2, which is non-positive whenever e2 <= B.
    double previous = std::numeric_limits<double>::infinity();
    std::vector<double> rates = sched.rates;
    std::sort(rates.begin(), rates.end());
    for (double r : rates) {
      const Allocation a = optimal_allocation(d.p, r, d.day);
      CHECK(a.e2 <= previous + 1e-9);
      previous = a.e2;
    }
  }
}

TEST_CASE("day-nine effort is not monotone in the rate") {
  // With a substitution elasticity 1/(alpha - 1) above one, raising R moves
  // enough work to day nine that e9 itself grows.
  const Preferences p = prefs(1.0, 0.986, 1.282);
  const Allocation a = optimal_allocation(p, 0.75, DecisionDay::zero);
  const Allocation b = optimal_allocation(p, 1.0, DecisionDay::zero);
  REQUIRE(a.censored == Censoring::interior);
  REQUIRE(b.censored == Censoring::interior);
  CHECK(b.e9 > a.e9);
}

TEST_CASE("log effort ratio and censor limits") {
  CHECK(log_effort_ratio({180.0, 180.0, Censoring::interior}, 10.0) == 0.0);
  CHECK(log_effort_ratio({0.0, 360.0, Censoring::at_lower}, 10.0) == doctest::Approx(std::log(10.0 / 370.0)));
  CHECK(log_effort_ratio({0.0, 360.0, Censoring::at_lower}, 10.0) == doctest::Approx(-3.6109).epsilon(1e-4));
  CHECK(log_effort_ratio({360.0, 0.0, Censoring::at_upper}, 10.0) == doctest::Approx(3.6109).epsilon(1e-4));

  const CensorLimits l1 = censor_limits(1.0, 10.0);
  CHECK(l1.lower == doctest::Approx(-3.6109).epsilon(1e-4));
  CHECK(l1.upper == doctest::Approx(3.6109).epsilon(1e-4));
  CHECK(l1.lower == doctest::Approx(-l1.upper).epsilon(1e-15));

  const CensorLimits l05 = censor_limits(0.5, 10.0);
  CHECK(l05.lower == doctest::Approx(std::log(10.0 / 730.0)));
  CHECK(l05.lower == doctest::Approx(-4.2905).epsilon(1e-4));
  CHECK(l05.upper == doctest::Approx(std::log(370.0 / 10.0)));

  const CensorLimits l15 = censor_limits(1.5, 10.0);
  CHECK(l15.lower == doctest::Approx(std::log(10.0 / 250.0)));
  CHECK(l15.lower == doctest::Approx(-3.2189).epsilon(1e-4));

  // The limits are the images of the budget endpoints.
  for (double r : RateSchedule{}.rates) {
    const CensorLimits l = censor_limits(r, 10.0);
    CHECK(l.lower < l.upper);
    CHECK(l.lower == doctest::Approx(log_effort_ratio(allocation_from_day_two(0.0, r), 10.0)));
    CHECK(l.upper == doctest::Approx(log_effort_ratio(allocation_from_day_two(360.0, r), 10.0)));
  }
}

TEST_CASE("inverting the log effort ratio") {
  CHECK(invert_log_effort_ratio(0.0, 1.0, 10.0).e2 == doctest::Approx(180.0).epsilon(1e-12));

  const double lower = censor_limits(1.0, 10.0).lower;
  const Allocation at = invert_log_effort_ratio(lower, 1.0, 10.0);
  CHECK(at.e2 == 0.0);
  CHECK(at.censored == Censoring::at_lower);
  // The four-decimal rendering of the limit sits just inside it.
  CHECK(invert_log_effort_ratio(-3.6109, 1.0, 10.0).e2 < 1e-3);
  CHECK(invert_log_effort_ratio(lower - 1.0, 1.0, 10.0).censored == Censoring::at_lower);
  const Allocation above = invert_log_effort_ratio(5.0, 0.75, 10.0);
  CHECK(above.e2 == 360.0);
  CHECK(above.e9 == 0.0);
  CHECK(above.censored == Censoring::at_upper);

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> e2(0.5, 359.5), omega(1.0, 100.0);
  for (int i = 0; i < 1000; ++i) {
    const double r = RateSchedule{}.rates[rng() % 5];
    const double w = omega(rng);
    const Allocation a = allocation_from_day_two(e2(rng), r);
    const Allocation back = invert_log_effort_ratio(log_effort_ratio(a, w), r, w);
    CHECK(std::abs(back.e2 - a.e2) < 1e-9);
    CHECK(std::abs(back.e9 - a.e9) < 1e-9);
    CHECK(back.censored == Censoring::interior);
  }
}

TEST_CASE("effort share") {
  CHECK(effort_share(allocation_from_day_two(160.0, 1.25)) == doctest::Approx(160.0 / 360.0));
  CHECK(effort_share(allocation_from_day_two(160.0, 1.25)) == doctest::Approx(0.444).epsilon(1e-3));
  CHECK(effort_share(allocation_from_day_two(0.0, 1.25)) == 0.0);
  CHECK(effort_share(allocation_from_day_two(360.0, 1.25)) == 1.0);
}

TEST_CASE("clamping near the bounds") {
  CHECK(allocation_from_day_two(1e-10, 1.0).censored == Censoring::at_lower);
  CHECK(allocation_from_day_two(1e-10, 1.0).e2 == 0.0);
  CHECK(allocation_from_day_two(360.0 - 1e-10, 1.0).censored == Censoring::at_upper);
  CHECK(allocation_from_day_two(1e-6, 1.0).censored == Censoring::interior);
  CHECK(allocation_from_day_two(-5.0, 1.0).e2 == 0.0);
  CHECK(allocation_from_day_two(400.0, 0.5).e9 == 0.0);
}
