#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

namespace qhd {

enum class DecisionDay : int { zero = 0, two = 2 };

inline constexpr bool is_present_day(DecisionDay d) { return d == DecisionDay::two; }

// Structural preferences of one decision-maker under quasi-hyperbolic
// discounting with power effort cost (e + omega)^alpha.
struct Preferences {
  double beta = 1.0;   // present-bias factor
  double delta = 1.0;  // daily discount factor
  double alpha = 2.0;  // effort-cost convexity
  double omega = 10.0; // background effort, tasks per day

  // Throws std::invalid_argument when any field is outside its domain.
  void validate() const;
};

inline constexpr double kCertainRate = 1.25;
inline constexpr double kDefaultOmega = 10.0;
inline constexpr double kDefaultBudget = 360.0;
inline constexpr int kDefaultDelayDays = 7;

struct RateSchedule {
  std::vector<double> rates{1.25, 0.75, 1.0, 1.5, 0.5};
  double budget = kDefaultBudget;
  int delay_days = kDefaultDelayDays;

  void validate() const;
  std::size_t size() const { return rates.size(); }
  // Index of `rate` in the schedule; throws std::out_of_range if absent.
  std::size_t index_of(double rate) const;
  // Index of the rate implemented with certainty under the Certain Rate cell.
  std::size_t certain_rate_index() const { return index_of(kCertainRate); }
};

enum class Censoring { interior, at_lower, at_upper };

std::string_view to_string(Censoring c);

struct Allocation {
  double e2 = 0.0; // day-two effort
  double e9 = 0.0; // day-nine effort
  Censoring censored = Censoring::interior;
};

// e2 within this distance of a budget bound is treated as sitting on the bound.
inline constexpr double kClampTolerance = 1e-9;

// Builds an allocation from day-two effort: clamps e2 into [0, budget],
// derives e9 from e2 + rate * e9 = budget and labels censoring.
Allocation allocation_from_day_two(double e2, double rate, double budget = kDefaultBudget);

// Closed-form solution of the Euler condition
//   ((e2 + w) / (e9 + w))^(alpha - 1) = beta^[d = 2] * delta^delay / R
// followed by clamping to the budget.
Allocation optimal_allocation(const Preferences& prefs, double rate, DecisionDay day,
                              double budget = kDefaultBudget,
                              int delay_days = kDefaultDelayDays);

// ln((e2 + omega) / (e9 + omega)).
double log_effort_ratio(const Allocation& alloc, double omega);

struct CensorLimits {
  double lower = 0.0; // image of e2 = 0
  double upper = 0.0; // image of e2 = budget
};

CensorLimits censor_limits(double rate, double omega, double budget = kDefaultBudget);

// Inverse of log_effort_ratio under the budget identity, clamped to the limits.
Allocation invert_log_effort_ratio(double log_ratio, double rate, double omega,
                                   double budget = kDefaultBudget);

double effort_share(const Allocation& alloc, double budget = kDefaultBudget);

} // namespace qhd
