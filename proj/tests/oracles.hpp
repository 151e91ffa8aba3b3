#pragma once

// Reference computations used only by the tests. None of them call into the
// library's closed forms or likelihood kernels.

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/tools/minima.hpp>

namespace oracle {

// Discounted effort cost of a day-two allocation seen from the decision day,
// normalized so that day-two effort carries weight one:
//   (e2 + w)^a + b^[d=2] * delta^delay * (e9 + w)^a  with e9 = (B - e2) / R.
inline long double allocation_cost(long double e2, double beta, double delta, double alpha,
                                   double omega, double rate, bool present, double budget,
                                   int delay) {
  const long double e9 = (budget - e2) / rate;
  const long double w = present ? beta : 1.0L;
  return std::pow(e2 + omega, static_cast<long double>(alpha)) +
         w * std::pow(static_cast<long double>(delta), delay) *
             std::pow(e9 + omega, static_cast<long double>(alpha));
}

// Numerical minimizer of allocation_cost over e2 in [0, budget] (Brent, extended precision).
inline double optimal_e2(double beta, double delta, double alpha, double omega, double rate,
                         bool present, double budget = 360.0, int delay = 7) {
  auto f = [&](long double e2) {
    return allocation_cost(e2, beta, delta, alpha, omega, rate, present, budget, delay);
  };
  std::uintmax_t iters = 500;
  const auto r = boost::math::tools::brent_find_minima(
      f, 0.0L, static_cast<long double>(budget), std::numeric_limits<long double>::digits / 2, iters);
  return static_cast<double>(r.first);
}

// Least squares by normal equations with an LDLT solve.
inline Eigen::VectorXd ols(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  return (X.transpose() * X).ldlt().solve(X.transpose() * y);
}

struct TobitRow {
  std::vector<double> x;
  double y;       // observed value for interior rows
  int censor;     // -1 left, 0 interior, +1 right
  double lower;
  double upper;
};

// Two-limit Tobit log-likelihood in (coefficients, sigma), written with boost's
// normal distribution.
inline double tobit_loglik(const std::vector<TobitRow>& rows, const std::vector<double>& b,
                           double sigma) {
  const boost::math::normal n01;
  double ll = 0.0;
  for (const TobitRow& r : rows) {
    double mu = 0.0;
    for (std::size_t j = 0; j < b.size(); ++j) mu += r.x[j] * b[j];
    if (r.censor < 0) ll += std::log(boost::math::cdf(n01, (r.lower - mu) / sigma));
    else if (r.censor > 0) ll += std::log(boost::math::cdf(boost::math::complement(n01, (r.upper - mu) / sigma)));
    else ll += std::log(boost::math::pdf(n01, (r.y - mu) / sigma)) - std::log(sigma);
  }
  return ll;
}

struct GridResult {
  double b0, b1, sigma, loglik;
};

// Exhaustive search over (b0, b1, sigma) on successively finer grids. Each
// level scans +-10 steps around the previous best; the final step is `resolution`.
inline GridResult grid_search_2(const std::vector<TobitRow>& rows, GridResult start,
                                double coarse_step, double resolution) {
  GridResult best = start;
  best.loglik = tobit_loglik(rows, {best.b0, best.b1}, best.sigma);
  for (double step = coarse_step; step >= resolution * 0.999; step /= 10.0) {
    bool moved = true;
    while (moved) {
      moved = false;
      const GridResult centre = best;
      for (int i = -10; i <= 10; ++i)
        for (int j = -10; j <= 10; ++j)
          for (int k = -10; k <= 10; ++k) {
            const double s = centre.sigma + k * step;
            if (s <= 0.0) continue;
            const double b0 = centre.b0 + i * step;
            const double b1 = centre.b1 + j * step;
            const double ll = tobit_loglik(rows, {b0, b1}, s);
            if (ll > best.loglik) {
              best = {b0, b1, s, ll};
              moved = true;
            }
          }
    }
  }
  return best;
}

// Central finite-difference gradient.
inline Eigen::VectorXd fd_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                                   const Eigen::VectorXd& x, double h) {
  Eigen::VectorXd g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Eigen::VectorXd xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    g[i] = (f(xp) - f(xm)) / (2.0 * h);
  }
  return g;
}

// Relative discrepancy used for gradient checks: |a - b| / max(|a|, |b|, 1).
inline double relative_error(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1.0});
}

// Implementation probabilities of the certain-rate decision, written out from
// the protocol description as exact fractions (numerator, denominator).
// Index: cell (baseline, CD, CR, CR+CD) x day (0, 2).
inline constexpr std::pair<int, int> kImplementationTable[4][2] = {
    {{1, 10}, {1, 10}}, {{1, 10}, {1, 5}}, {{1, 2}, {1, 2}}, {{1, 2}, {1, 1}}};

} // namespace oracle
