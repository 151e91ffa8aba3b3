#pragma once

#include <cmath>
#include <numbers>

namespace qhd::normal {

inline constexpr double kLogSqrt2Pi = 0.91893853320467274178; // 0.5 * ln(2 pi)

inline double log_pdf(double z) { return -0.5 * z * z - kLogSqrt2Pi; }

// Mills ratio R(x) = (1 - Phi(x)) / phi(x) for x >= 5 by continued fraction
// (modified Lentz).
inline double mills_ratio_upper(double x) {
  constexpr double tiny = 1e-300;
  double f = x;
  double c = x;
  double d = 0.0;
  for (int k = 1; k < 500; ++k) {
    d = x + k * d;
    if (std::abs(d) < tiny) d = tiny;
    c = x + k / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = c * d;
    f *= delta;
    if (std::abs(delta - 1.0) < 1e-16) break;
  }
  return 1.0 / f;
}

struct LogCdf {
  double log_cdf;     // ln Phi(z)
  double hazard;      // phi(z) / Phi(z)
};

// ln Phi(z) and the inverse Mills ratio phi(z)/Phi(z), stable deep in the
// lower tail.
inline LogCdf log_cdf(double z) {
  if (z < -5.0) {
    const double r = mills_ratio_upper(-z);
    return {log_pdf(z) + std::log(r), 1.0 / r};
  }
  const double cdf = 0.5 * std::erfc(-z / std::numbers::sqrt2);
  return {std::log(cdf), std::exp(log_pdf(z)) / cdf};
}

// Upper tail of a chi-square with one degree of freedom.
inline double chi2_1_upper_tail(double statistic) {
  if (!(statistic > 0.0)) return 1.0;
  return std::erfc(std::sqrt(0.5 * statistic));
}

} // namespace qhd::normal
