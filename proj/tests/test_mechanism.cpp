#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "qhd/mechanism.hpp"
#include "qhd/rng.hpp"

using namespace qhd;

TEST_CASE("cells enumerate the factorial design") {
  CHECK(kAllCells.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(TreatmentCell::from_index(i).index() == i);
    CHECK(parse_cell(cell_key(kAllCells[i])) == kAllCells[i]);
  }
  CHECK(kCellCrCd.certain_rate);
  CHECK(kCellCrCd.certain_day);
  CHECK_FALSE(parse_cell("treatment").has_value());
  CHECK(cell_label(kCellCd) == "Certain Day");
}

TEST_CASE("draws are deterministic in the seed") {
  for (std::uint64_t s : {0ull, 1ull, 99ull, 0xDEADBEEFull}) {
    const MechanismDraw a = draw_mechanism(kCellBaseline, s);
    const MechanismDraw b = draw_mechanism(kCellBaseline, s);
    CHECK(a.selected_day == b.selected_day);
    CHECK(a.selected_rate_index == b.selected_rate_index);
  }
}

TEST_CASE("certain rate always implements 1.25 and certain day reveals early") {
  const RateSchedule sched;
  for (std::uint64_t s = 0; s < 500; ++s) {
    CHECK(sched.rates[draw_mechanism(kCellCr, s).selected_rate_index] == 1.25);
    CHECK(sched.rates[draw_mechanism(kCellCrCd, s).selected_rate_index] == 1.25);
    CHECK(draw_mechanism(kCellCd, s).day_revealed_before_day2);
    CHECK_FALSE(draw_mechanism(kCellCr, s).day_revealed_before_day2);
  }
}

TEST_CASE("day coin is fair") {
  constexpr int n = 100000;
  int twos = 0;
  for (int s = 0; s < n; ++s)
    twos += draw_mechanism(kCellBaseline, derive_seed(42, s)).selected_day == DecisionDay::two;
  const double sd = std::sqrt(0.25 / n);
  CHECK(std::abs(twos / double(n) - 0.5) < 3.0 * sd);
}

TEST_CASE("implementation probabilities match the protocol table exactly") {
  for (std::size_t c = 0; c < 4; ++c)
    for (int d = 0; d < 2; ++d) {
      const auto [num, den] = oracle::kImplementationTable[c][d];
      CHECK(implementation_probability(kAllCells[c], d == 0 ? DecisionDay::zero : DecisionDay::two) ==
            Probability(num, den));
    }
  CHECK(implementation_probability(kCellBaseline, DecisionDay::zero) == Probability(1, 10));
  CHECK(implementation_probability(kCellCd, DecisionDay::two) == Probability(1, 5));
  CHECK(implementation_probability(kCellCrCd, DecisionDay::two) == Probability(1));
}

TEST_CASE("incentive rules") {
  const RateSchedule sched;
  MechanismDraw day0;
  day0.selected_day = DecisionDay::zero;
  MechanismDraw day2;
  day2.selected_day = DecisionDay::two;
  for (std::size_t i = 0; i < sched.size(); ++i)
    for (DecisionDay d : {DecisionDay::zero, DecisionDay::two}) {
      CHECK(is_incentivized(kCellBaseline, d, i, day0));
      CHECK(is_incentivized(kCellBaseline, d, i, day2));
    }
  CHECK_FALSE(is_incentivized(kCellCr, DecisionDay::zero, sched.index_of(0.5), day0));
  CHECK(is_incentivized(kCellCr, DecisionDay::two, sched.index_of(1.25), day0));
  CHECK_FALSE(is_incentivized(kCellCd, DecisionDay::two, 2, day0));
  CHECK(is_incentivized(kCellCd, DecisionDay::two, 2, day2));
  CHECK(is_incentivized(kCellCd, DecisionDay::zero, 2, day2));
  CHECK(is_incentivized(kCellCrCd, DecisionDay::two, sched.index_of(1.25), day2));

  day2.selected_rate_index = 0;
  CHECK(incentivized_count(kCellBaseline, day2) == 10);
  CHECK(incentivized_count(kCellCd, day2) == 10);
  CHECK(incentivized_count(kCellCd, day0) == 5);
  CHECK(incentivized_count(kCellCr, day2) == 2);
  CHECK(incentivized_count(kCellCrCd, day2) == 2);
  CHECK(incentivized_count(kCellCrCd, day0) == 1);
}

TEST_CASE("Monte Carlo implementation frequencies of the certain-rate decision") {
  const RateSchedule sched;
  const std::size_t k = sched.certain_rate_index();
  constexpr int n = 100000;
  for (TreatmentCell cell : kAllCells)
    for (DecisionDay day : {DecisionDay::zero, DecisionDay::two}) {
      int informative = 0, chosen = 0;
      for (int s = 0; s < n; ++s) {
        const MechanismDraw draw = draw_mechanism(cell, derive_seed(cell.index() * 2 + 1, s));
        if (!is_incentivized(cell, day, k, draw)) continue;
        ++informative;
        chosen += selects(draw, day, k);
      }
      const Probability p = implementation_probability(cell, day);
      const double pf = boost::rational_cast<double>(p);
      const double freq = chosen / double(informative);
      const double sd = std::sqrt(pf * (1.0 - pf) / informative);
      INFO(cell_key(cell), " day ", static_cast<int>(day), " freq ", freq, " target ", pf);
      if (sd == 0.0) CHECK(freq == pf);
      else CHECK(std::abs(freq - pf) <= 3.0 * sd);
    }
}
