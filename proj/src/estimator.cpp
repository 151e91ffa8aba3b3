#include "qhd/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "qhd/bfgs.hpp"
#include "qhd/rng.hpp"

namespace qhd {

Eigen::VectorXd ThetaVector::coefficients() const {
  Eigen::VectorXd c(6);
  c << delay, lnrate, present, cr, cd, crcd;
  return c;
}

Eigen::VectorXd ThetaVector::params() const {
  Eigen::VectorXd p(7);
  p << delay, lnrate, present, cr, cd, crcd, std::log(sigma);
  return p;
}

ThetaVector ThetaVector::from_params(const Eigen::VectorXd& p) {
  if (p.size() != 7) throw std::invalid_argument("ThetaVector needs 6 coefficients and ln sigma");
  return {p[0], p[1], p[2], p[3], p[4], p[5], std::exp(p[6])};
}

ThetaVector ThetaVector::from_structural(const std::array<double, 4>& betas, double delta,
                                         double alpha, double sigma) {
  const double inv = 1.0 / (alpha - 1.0);
  const double lb = std::log(betas[0]), lb_cd = std::log(betas[1]), lb_cr = std::log(betas[2]),
               lb_crcd = std::log(betas[3]);
  ThetaVector t;
  t.delay = std::log(delta) * inv;
  t.lnrate = -inv;
  t.present = lb * inv;
  t.cr = (lb_cr - lb) * inv;
  t.cd = (lb_cd - lb) * inv;
  t.crcd = (lb_crcd - lb_cr - lb_cd + lb) * inv;
  t.sigma = sigma;
  return t;
}

DesignRow build_design_row(const DecisionRecord& record, double omega, double budget,
                           int delay_days) {
  if (!record.incentivized)
    throw std::invalid_argument("hypothetical decision of subject " +
                                std::to_string(record.subject_id) + " cannot enter the likelihood");
  if (!(omega > 0.0)) throw std::invalid_argument("omega must be positive");
  if (!(record.rate > 0.0)) throw std::invalid_argument("rate must be positive");
  if (!(record.e2 >= 0.0 && record.e2 <= budget))
    throw std::invalid_argument("e2 outside [0, budget] for subject " +
                                std::to_string(record.subject_id));

  const Allocation alloc = allocation_from_day_two(record.e2, record.rate, budget);
  DesignRow row;
  row.censoring = alloc.censored;
  row.limits = censor_limits(record.rate, omega, budget);
  switch (alloc.censored) {
  case Censoring::interior: row.log_ratio = log_effort_ratio(alloc, omega); break;
  case Censoring::at_lower: row.log_ratio = row.limits.lower; break;
  case Censoring::at_upper: row.log_ratio = row.limits.upper; break;
  }
  const double present = is_present_day(record.decision_day) ? 1.0 : 0.0;
  const double cr = record.certain_rate ? 1.0 : 0.0;
  const double cd = record.certain_day ? 1.0 : 0.0;
  row.covariates = {static_cast<double>(delay_days), std::log(record.rate), present,
                    cr * present,                    cd * present,          cr * cd * present};
  row.cluster = record.subject_id;
  return row;
}

TobitData build_design(std::span<const DecisionRecord> records, double omega, double budget,
                       int delay_days) {
  TobitData data(kReducedFormCovariates);
  for (const DecisionRecord& r : records) {
    const DesignRow row = build_design_row(r, omega, budget, delay_days);
    data.add_row(row.covariates, row.log_ratio, row.censoring, row.limits.lower, row.limits.upper,
                 row.cluster);
  }
  return data;
}

namespace {

std::vector<Eigen::Index> free_indices(const std::vector<bool>& frozen) {
  std::vector<Eigen::Index> idx;
  for (std::size_t j = 0; j < frozen.size(); ++j)
    if (!frozen[j]) idx.push_back(static_cast<Eigen::Index>(j));
  return idx;
}

Eigen::MatrixXd submatrix(const Eigen::MatrixXd& m, const std::vector<Eigen::Index>& idx) {
  const auto k = static_cast<Eigen::Index>(idx.size());
  Eigen::MatrixXd out(k, k);
  for (Eigen::Index a = 0; a < k; ++a)
    for (Eigen::Index b = 0; b < k; ++b) out(a, b) = m(idx[a], idx[b]);
  return out;
}

LogLikelihood evaluate(const TobitData& data, const Eigen::VectorXd& params, bool parallel) {
  return parallel ? tobit_loglik_parallel(data, params) : tobit_loglik_serial(data, params);
}

constexpr double kLoglikRoundoff = 1e-11;

struct Polished {
  Eigen::VectorXd params;
  double loglik = 0.0;
  double grad_norm = 0.0;
  double last_step = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Newton iterations with the finite-difference Hessian, accepted on decrease of
// the gradient norm. BFGS brings the point close enough that this converges
// quadratically. Near the optimum the log-likelihood is flat to working precision,
// so a step may not lower it below the starting value by more than summation
// rounding.
Polished newton_polish(const TobitData& data, Eigen::VectorXd x, const std::vector<bool>& frozen,
                       const FitOptions& opt) {
  const std::vector<Eigen::Index> idx = free_indices(frozen);
  Polished out;
  LogLikelihood cur = evaluate(data, x, opt.parallel);
  const double start_value = cur.value - kLoglikRoundoff * std::abs(cur.value);
  for (out.iterations = 0; out.iterations < 30; ++out.iterations) {
    Eigen::VectorXd g(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t a = 0; a < idx.size(); ++a) g[static_cast<Eigen::Index>(a)] = cur.gradient[idx[a]];
    const Eigen::MatrixXd h =
        submatrix(numerical_hessian(data, x, opt.hessian_step, opt.parallel), idx);
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(-h);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) break;
    const Eigen::VectorXd step = ldlt.solve(g);
    const double gnorm = g.lpNorm<Eigen::Infinity>();
    out.last_step = step.lpNorm<Eigen::Infinity>();
    if (gnorm < opt.gradient_tolerance && out.last_step < opt.step_tolerance) {
      out.converged = true;
      break;
    }
    bool accepted = false;
    for (double scale = 1.0; scale > 1e-6; scale *= 0.5) {
      Eigen::VectorXd trial = x;
      for (std::size_t a = 0; a < idx.size(); ++a)
        trial[idx[a]] += scale * step[static_cast<Eigen::Index>(a)];
      LogLikelihood next = evaluate(data, trial, opt.parallel);
      if (!std::isfinite(next.value)) continue;
      double next_norm = 0.0;
      for (Eigen::Index j : idx) next_norm = std::max(next_norm, std::abs(next.gradient[j]));
      if (next.value >= start_value && (next_norm < gnorm || next.value > cur.value)) {
        x = std::move(trial);
        cur = std::move(next);
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
  }
  out.params = std::move(x);
  out.loglik = cur.value;
  out.grad_norm = 0.0;
  for (Eigen::Index j : idx) out.grad_norm = std::max(out.grad_norm, std::abs(cur.gradient[j]));
  return out;
}

} // namespace

Eigen::MatrixXd numerical_hessian(const TobitData& data, const Eigen::VectorXd& params,
                                  double relative_step, bool parallel) {
  const Eigen::Index k = params.size();
  Eigen::MatrixXd h(k, k);
  for (Eigen::Index j = 0; j < k; ++j) {
    const double step = relative_step * std::max(1.0, std::abs(params[j]));
    Eigen::VectorXd up = params, down = params;
    up[j] += step;
    down[j] -= step;
    h.col(j) = (evaluate(data, up, parallel).gradient - evaluate(data, down, parallel).gradient) /
               (2.0 * step);
  }
  return 0.5 * (h + h.transpose());
}

Eigen::VectorXd default_start(const TobitData& data) {
  const std::size_t p = data.covariates();
  const std::vector<std::size_t> support = data.support();
  std::vector<Eigen::Index> cols;
  for (std::size_t j = 0; j < p; ++j)
    if (support[j] > 0) cols.push_back(static_cast<Eigen::Index>(j));

  const std::size_t n_int = data.count(Censoring::interior);
  Eigen::MatrixXd x(static_cast<Eigen::Index>(n_int), static_cast<Eigen::Index>(cols.size()));
  Eigen::VectorXd y(static_cast<Eigen::Index>(n_int));
  Eigen::Index r = 0;
  for (std::size_t i = 0; i < data.rows(); ++i) {
    if (data.censoring(i) != Censoring::interior) continue;
    const auto xi = data.x(i);
    for (std::size_t c = 0; c < cols.size(); ++c)
      x(r, static_cast<Eigen::Index>(c)) = xi[static_cast<std::size_t>(cols[c])];
    y[r++] = data.y(i);
  }
  const Eigen::VectorXd b = x.colPivHouseholderQr().solve(y);
  const double rss = (y - x * b).squaredNorm();

  Eigen::VectorXd start = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p + 1));
  for (std::size_t c = 0; c < cols.size(); ++c) start[cols[c]] = b[static_cast<Eigen::Index>(c)];
  const double scale = std::sqrt(rss / static_cast<double>(std::max<std::size_t>(n_int, 1)));
  start[static_cast<Eigen::Index>(p)] = std::log(scale > 1e-8 ? scale : 1.0);
  return start;
}

TobitFit fit(const TobitData& data, const FitOptions& options,
             std::optional<Eigen::VectorXd> start) {
  const std::size_t p = data.covariates();
  const std::size_t n = data.rows();
  TobitFit out;
  out.options = options;
  out.n_obs = n;
  out.n_left = data.count(Censoring::at_lower);
  out.n_right = data.count(Censoring::at_upper);
  const std::vector<int> clusters = data.cluster_ids();
  out.n_clusters = clusters.size();
  out.support = data.support();

  if (n == 0) throw std::invalid_argument("no observations to fit");
  if (out.n_left == n) throw std::invalid_argument("every observation is left-censored");
  if (out.n_right == n) throw std::invalid_argument("every observation is right-censored");
  if (data.count(Censoring::interior) == 0)
    throw std::invalid_argument("no interior observations; the noise scale is not identified");
  if (out.n_clusters < 2) throw std::invalid_argument("at least two clusters are required");

  std::vector<bool> frozen(p + 1, false);
  for (std::size_t j = 0; j < p; ++j) frozen[j] = out.support[j] == 0;

  Eigen::VectorXd x0 = start ? *start : default_start(data);
  if (static_cast<std::size_t>(x0.size()) != p + 1)
    throw std::invalid_argument("start vector has wrong length");
  for (std::size_t j = 0; j < p; ++j)
    if (frozen[j]) x0[static_cast<Eigen::Index>(j)] = 0.0;

  const Objective negative_loglik = [&](const Eigen::VectorXd& x, Eigen::VectorXd& grad) {
    LogLikelihood ll = evaluate(data, x, options.parallel);
    grad = -ll.gradient;
    return -ll.value;
  };
  BfgsOptions bopt;
  bopt.gradient_tolerance = options.gradient_tolerance;
  bopt.step_tolerance = options.step_tolerance;

  const RandomStream restart_rng(options.restart_seed);
  BfgsResult best;
  bool have_best = false;
  std::ostringstream diag;
  for (int r = 0; r <= options.restarts; ++r) {
    Eigen::VectorXd s = x0;
    if (r > 0) {
      RandomStream rng = restart_rng.split(static_cast<std::uint64_t>(r));
      for (Eigen::Index j = 0; j < s.size(); ++j) {
        if (frozen[static_cast<std::size_t>(j)]) continue;
        const double scale = j == s.size() - 1 ? 0.3 : 0.5 * (std::abs(s[j]) + 0.1);
        s[j] += scale * rng.normal();
      }
    }
    BfgsResult res = minimize_bfgs(negative_loglik, s, bopt, frozen);
    out.start_logliks.push_back(-res.value);
    diag << "start " << r << ": loglik " << -res.value << ", " << res.iterations
         << " iterations, " << res.message << "\n";
    if (std::isfinite(res.value) && (!have_best || res.value < best.value)) {
      best = std::move(res);
      have_best = true;
    }
  }
  if (!have_best) {
    out.params = x0;
    out.loglik = -std::numeric_limits<double>::infinity();
    out.diagnostics = diag.str() + "no start produced a finite log-likelihood\n";
    out.covariance = Eigen::MatrixXd::Constant(x0.size(), x0.size(), std::nan(""));
    return out;
  }

  const Polished pol = newton_polish(data, best.x, frozen, options);
  out.params = pol.params;
  out.loglik = pol.loglik;
  out.iterations = best.iterations + pol.iterations;
  out.converged = pol.converged;
  diag << "newton polish: " << pol.iterations << " iterations, gradient inf-norm " << pol.grad_norm
       << ", last step " << pol.last_step << (pol.converged ? ", converged" : ", NOT converged")
       << "\n";

  // Sandwich covariance over the identified parameters.
  const std::vector<Eigen::Index> idx = free_indices(frozen);
  const Eigen::MatrixXd a =
      -submatrix(numerical_hessian(data, out.params, options.hessian_step, options.parallel), idx);
  const Eigen::MatrixXd scores_full = tobit_cluster_scores(data, out.params);
  Eigen::MatrixXd scores(scores_full.rows(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t c = 0; c < idx.size(); ++c)
    scores.col(static_cast<Eigen::Index>(c)) = scores_full.col(idx[c]);
  Eigen::MatrixXd meat = scores.transpose() * scores;
  const auto g = static_cast<double>(out.n_clusters);
  if (options.cluster_correction) meat *= g / (g - 1.0);

  const auto k = static_cast<Eigen::Index>(p + 1);
  out.covariance = Eigen::MatrixXd::Constant(k, k, std::nan(""));
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
    out.converged = false;
    diag << "negative Hessian is not positive definite; covariance unavailable\n";
  } else {
    const Eigen::MatrixXd bread = ldlt.solve(Eigen::MatrixXd::Identity(a.rows(), a.cols()));
    Eigen::MatrixXd v = bread * meat * bread;
    v = (0.5 * (v + v.transpose())).eval();
    for (std::size_t r = 0; r < idx.size(); ++r)
      for (std::size_t c = 0; c < idx.size(); ++c)
        out.covariance(idx[r], idx[c]) = v(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
  }
  out.diagnostics = diag.str();
  return out;
}

TobitFit fit_records(std::span<const DecisionRecord> records, double omega,
                     const FitOptions& options, double budget, int delay_days) {
  const std::vector<DecisionRecord> rows = filter_analysis_rows(records);
  return fit(build_design(rows, omega, budget, delay_days), options);
}

} // namespace qhd
