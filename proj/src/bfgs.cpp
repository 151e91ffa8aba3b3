#include "qhd/bfgs.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace qhd {

namespace {

struct Probe {
  double step = 0.0;
  double value = 0.0;
  double slope = 0.0; // directional derivative
  Eigen::VectorXd gradient;
};

class LineSearch {
public:
  LineSearch(const Objective& f, const Eigen::VectorXd& x, const Eigen::VectorXd& dir,
             const std::vector<bool>& frozen, const BfgsOptions& opt, int& evaluations)
      : f_(f), x_(x), dir_(dir), frozen_(frozen), opt_(opt), evals_(evaluations) {}

  Probe eval(double step) {
    Probe p;
    p.step = step;
    p.gradient.resize(x_.size());
    p.value = f_(x_ + step * dir_, p.gradient);
    ++evals_;
    for (std::size_t j = 0; j < frozen_.size(); ++j)
      if (frozen_[j]) p.gradient[static_cast<Eigen::Index>(j)] = 0.0;
    p.slope = std::isfinite(p.value) ? p.gradient.dot(dir_) : 0.0;
    if (!std::isfinite(p.value)) p.value = std::numeric_limits<double>::infinity();
    return p;
  }

  // Nocedal and Wright, algorithms 3.5 and 3.6.
  bool run(const Probe& start, Probe& accepted) {
    start_ = start;
    Probe prev = start;
    double step = 1.0;
    for (int i = 0; i < 60; ++i) {
      Probe cur = eval(step);
      if (!armijo(cur) || (i > 0 && cur.value >= prev.value)) return zoom(prev, cur, accepted);
      if (std::abs(cur.slope) <= -opt_.c2 * start_.slope) {
        accepted = std::move(cur);
        return true;
      }
      if (cur.slope >= 0.0) return zoom(cur, prev, accepted);
      prev = std::move(cur);
      step *= 2.0;
    }
    return false;
  }

private:
  bool armijo(const Probe& p) const {
    return p.value <= start_.value + opt_.c1 * p.step * start_.slope;
  }

  static double interpolate(const Probe& lo, const Probe& hi) {
    // Minimizer of the cubic matching values and slopes at both ends.
    const double d1 = lo.slope + hi.slope - 3.0 * (lo.value - hi.value) / (lo.step - hi.step);
    const double disc = d1 * d1 - lo.slope * hi.slope;
    const double a = std::min(lo.step, hi.step);
    const double b = std::max(lo.step, hi.step);
    double t = 0.5 * (a + b);
    if (disc >= 0.0 && std::isfinite(hi.value)) {
      const double d2 = std::copysign(std::sqrt(disc), hi.step - lo.step);
      const double c = hi.step -
                       (hi.step - lo.step) * (hi.slope + d2 - d1) / (hi.slope - lo.slope + 2.0 * d2);
      if (std::isfinite(c)) t = c;
    }
    const double margin = 0.1 * (b - a);
    return std::clamp(t, a + margin, b - margin);
  }

  bool zoom(Probe lo, Probe hi, Probe& accepted) {
    for (int i = 0; i < 60; ++i) {
      if (std::abs(hi.step - lo.step) < 1e-16 * std::max(1.0, std::abs(lo.step))) break;
      Probe cur = eval(interpolate(lo, hi));
      if (!armijo(cur) || cur.value >= lo.value) {
        hi = std::move(cur);
      } else {
        if (std::abs(cur.slope) <= -opt_.c2 * start_.slope) {
          accepted = std::move(cur);
          return true;
        }
        if (cur.slope * (hi.step - lo.step) >= 0.0) hi = lo;
        lo = std::move(cur);
      }
    }
    // Fall back to the best sufficient-decrease point, if any.
    if (lo.step > 0.0 && lo.value < start_.value) {
      accepted = std::move(lo);
      return true;
    }
    return false;
  }

  const Objective& f_;
  const Eigen::VectorXd& x_;
  const Eigen::VectorXd& dir_;
  const std::vector<bool>& frozen_;
  const BfgsOptions& opt_;
  int& evals_;
  Probe start_;
};

} // namespace

BfgsResult minimize_bfgs(const Objective& f, Eigen::VectorXd x0, const BfgsOptions& options,
                         const std::vector<bool>& frozen) {
  const Eigen::Index n = x0.size();
  BfgsResult res;
  res.x = std::move(x0);
  res.gradient.resize(n);
  res.value = f(res.x, res.gradient);
  res.evaluations = 1;
  for (std::size_t j = 0; j < frozen.size(); ++j)
    if (frozen[j]) res.gradient[static_cast<Eigen::Index>(j)] = 0.0;
  if (!std::isfinite(res.value) || !res.gradient.allFinite()) {
    res.message = "objective is not finite at the starting point";
    return res;
  }

  Eigen::MatrixXd inv_hessian = Eigen::MatrixXd::Identity(n, n);
  for (std::size_t j = 0; j < frozen.size(); ++j)
    if (frozen[j]) inv_hessian(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j)) = 0.0;

  for (res.iterations = 0; res.iterations < options.max_iterations; ++res.iterations) {
    if (res.gradient.lpNorm<Eigen::Infinity>() < options.gradient_tolerance) {
      res.converged = true;
      res.message = "gradient tolerance reached";
      return res;
    }
    Eigen::VectorXd dir = -inv_hessian * res.gradient;
    if (dir.dot(res.gradient) >= 0.0) {
      // Curvature information went stale; restart from steepest descent.
      inv_hessian.setIdentity();
      for (std::size_t j = 0; j < frozen.size(); ++j)
        if (frozen[j]) inv_hessian(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j)) = 0.0;
      dir = -inv_hessian * res.gradient;
    }

    LineSearch search(f, res.x, dir, frozen, options, res.evaluations);
    Probe start{0.0, res.value, res.gradient.dot(dir), res.gradient};
    Probe next;
    if (!search.run(start, next)) {
      res.message = "line search failed to find an acceptable step";
      return res;
    }

    const Eigen::VectorXd s = next.step * dir;
    const Eigen::VectorXd y = next.gradient - res.gradient;
    res.x += s;
    res.value = next.value;
    res.gradient = next.gradient;
    res.last_step = s.lpNorm<Eigen::Infinity>();

    const double sy = s.dot(y);
    if (sy > 1e-300) {
      if (res.iterations == 0) inv_hessian *= sy / y.squaredNorm();
      const double rho = 1.0 / sy;
      const Eigen::VectorXd hy = inv_hessian * y;
      inv_hessian += ((sy + y.dot(hy)) * rho * rho) * (s * s.transpose()) -
                     rho * (hy * s.transpose() + s * hy.transpose());
    }
    if (res.last_step < options.step_tolerance &&
        res.gradient.lpNorm<Eigen::Infinity>() >= options.gradient_tolerance) {
      res.message = "step fell below tolerance before the gradient did";
      ++res.iterations;
      return res;
    }
  }
  res.converged = res.gradient.lpNorm<Eigen::Infinity>() < options.gradient_tolerance;
  res.message = res.converged ? "gradient tolerance reached" : "iteration limit reached";
  return res;
}

} // namespace qhd
