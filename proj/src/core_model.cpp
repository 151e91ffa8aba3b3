#include "qhd/core_model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace qhd {

void Preferences::validate() const {
  if (!(beta > 0.0) || !std::isfinite(beta))
    throw std::invalid_argument("beta must be positive, got " + std::to_string(beta));
  if (!(delta > 0.0 && delta <= 1.0))
    throw std::invalid_argument("delta must lie in (0, 1], got " + std::to_string(delta));
  if (!(alpha > 1.0) || !std::isfinite(alpha))
    throw std::invalid_argument("alpha must exceed 1 for an interior minimum, got " +
                                std::to_string(alpha));
  if (!(omega > 0.0) || !std::isfinite(omega))
    throw std::invalid_argument("omega must be positive, got " + std::to_string(omega));
}

void RateSchedule::validate() const {
  if (rates.empty()) throw std::invalid_argument("rate schedule is empty");
  for (double r : rates)
    if (!(r > 0.0) || !std::isfinite(r))
      throw std::invalid_argument("rates must be positive, got " + std::to_string(r));
  if (!(budget > 0.0)) throw std::invalid_argument("budget must be positive");
  if (delay_days <= 0) throw std::invalid_argument("delay_days must be positive");
}

std::size_t RateSchedule::index_of(double rate) const {
  for (std::size_t i = 0; i < rates.size(); ++i)
    if (std::abs(rates[i] - rate) < 1e-9) return i;
  throw std::out_of_range("rate " + std::to_string(rate) + " is not in the schedule");
}

std::string_view to_string(Censoring c) {
  switch (c) {
  case Censoring::interior: return "interior";
  case Censoring::at_lower: return "at_lower";
  case Censoring::at_upper: return "at_upper";
  }
  return "?";
}

Allocation allocation_from_day_two(double e2, double rate, double budget) {
  Allocation a;
  if (e2 <= kClampTolerance) {
    a.e2 = 0.0;
    a.censored = Censoring::at_lower;
  } else if (e2 >= budget - kClampTolerance) {
    a.e2 = budget;
    a.censored = Censoring::at_upper;
  } else {
    a.e2 = e2;
  }
  a.e9 = (budget - a.e2) / rate;
  return a;
}

Allocation optimal_allocation(const Preferences& prefs, double rate, DecisionDay day,
                              double budget, int delay_days) {
  prefs.validate();
  if (!(rate > 0.0)) throw std::invalid_argument("rate must be positive");
  if (!(budget > 0.0)) throw std::invalid_argument("budget must be positive");

  const double log_discount = (is_present_day(day) ? std::log(prefs.beta) : 0.0) +
                              delay_days * std::log(prefs.delta) - std::log(rate);
  const double k = std::exp(log_discount / (prefs.alpha - 1.0));
  const double w = prefs.omega;
  if (!std::isfinite(k)) return allocation_from_day_two(budget, rate, budget);

  const double e9 = (budget + w - k * w) / (k + rate);
  return allocation_from_day_two(budget - rate * e9, rate, budget);
}

double log_effort_ratio(const Allocation& alloc, double omega) {
  if (!(omega > 0.0)) throw std::invalid_argument("omega must be positive");
  return std::log((alloc.e2 + omega) / (alloc.e9 + omega));
}

CensorLimits censor_limits(double rate, double omega, double budget) {
  if (!(rate > 0.0) || !(omega > 0.0) || !(budget > 0.0))
    throw std::invalid_argument("censor_limits requires positive rate, omega and budget");
  return {std::log(omega / (budget / rate + omega)), std::log((budget + omega) / omega)};
}

Allocation invert_log_effort_ratio(double log_ratio, double rate, double omega, double budget) {
  const CensorLimits lim = censor_limits(rate, omega, budget);
  if (log_ratio <= lim.lower) return allocation_from_day_two(0.0, rate, budget);
  if (log_ratio >= lim.upper) return allocation_from_day_two(budget, rate, budget);
  const double x = std::exp(log_ratio);
  const double e2 = (x * (budget / rate + omega) - omega) / (1.0 + x / rate);
  return allocation_from_day_two(std::clamp(e2, 0.0, budget), rate, budget);
}

double effort_share(const Allocation& alloc, double budget) {
  if (!(budget > 0.0)) throw std::invalid_argument("budget must be positive");
  return alloc.e2 / budget;
}

} // namespace qhd
