#include "qhd/inference.hpp"

#include <cmath>
#include <stdexcept>

#include "qhd/normal.hpp"

namespace qhd {

namespace {

// Rows: which reduced-form coefficients sum into ln(beta_T) * (-theta_lnrate).
// Columns follow (delay, lnrate, present, cr, cd, crcd).
constexpr std::array<std::array<double, 6>, 5> kExponentWeights{{
    {0, 0, 1, 0, 0, 0}, // beta
    {0, 0, 1, 0, 1, 0}, // beta_cd
    {0, 0, 1, 1, 0, 0}, // beta_cr
    {0, 0, 1, 1, 1, 1}, // beta_crcd
    {1, 0, 0, 0, 0, 0}, // delta
}};

double exponent_sum(std::size_t row, const Vector6& theta) {
  double s = 0.0;
  for (std::size_t j = 0; j < 6; ++j) s += kExponentWeights[row][j] * theta[static_cast<Eigen::Index>(j)];
  return s;
}

void require_negative_lnrate(double lnrate) {
  if (!(lnrate < 0.0))
    throw std::domain_error("recovery requires theta_lnrate < 0 (alpha > 1), got " +
                            std::to_string(lnrate));
}

} // namespace

std::string_view param_name(Param p) {
  static constexpr std::array<std::string_view, 6> names{"beta",     "beta_cd", "beta_cr",
                                                         "beta_crcd", "delta",  "alpha"};
  return names[static_cast<std::size_t>(p)];
}

Vector6 recover(const Vector6& theta) {
  require_negative_lnrate(theta[1]);
  const double scale = -theta[1];
  Vector6 out;
  for (std::size_t r = 0; r < 5; ++r)
    out[static_cast<Eigen::Index>(r)] = std::exp(exponent_sum(r, theta) / scale);
  out[5] = 1.0 - 1.0 / theta[1];
  return out;
}

Vector6 recover(const ThetaVector& theta) {
  Vector6 t;
  t << theta.delay, theta.lnrate, theta.present, theta.cr, theta.cd, theta.crcd;
  return recover(t);
}

Matrix6 recover_jacobian(const Vector6& theta) {
  require_negative_lnrate(theta[1]);
  const double scale = -theta[1];
  Matrix6 jac = Matrix6::Zero();
  for (std::size_t r = 0; r < 5; ++r) {
    const double s = exponent_sum(r, theta);
    const double value = std::exp(s / scale);
    const auto row = static_cast<Eigen::Index>(r);
    for (std::size_t j = 0; j < 6; ++j)
      jac(row, static_cast<Eigen::Index>(j)) = value * kExponentWeights[r][j] / scale;
    jac(row, 1) += value * s / (scale * scale);
  }
  jac(5, 1) = 1.0 / (theta[1] * theta[1]);
  return jac;
}

Vector6 reduced_form(const Vector6& s) {
  if (!(s[5] > 1.0)) throw std::domain_error("alpha must exceed 1");
  const double inv = 1.0 / (s[5] - 1.0);
  const double lb = std::log(s[0]), lb_cd = std::log(s[1]), lb_cr = std::log(s[2]),
               lb_crcd = std::log(s[3]);
  Vector6 t;
  t << std::log(s[4]) * inv, -inv, lb * inv, (lb_cr - lb) * inv, (lb_cd - lb) * inv,
      (lb_crcd - lb_cr - lb_cd + lb) * inv;
  return t;
}

DeltaMethodResult delta_method(const Eigen::VectorXd& point, const Eigen::MatrixXd& covariance,
                               const Transform& transform) {
  DeltaMethodResult out;
  out.estimate = transform.value(point);
  const Eigen::MatrixXd jac = transform.jacobian(point);
  if (jac.cols() != covariance.rows() || covariance.rows() != covariance.cols())
    throw std::invalid_argument("Jacobian and covariance dimensions disagree");

  // Unidentified inputs carry NaN variances; zero them for the product and
  // mark every output that loads on them.
  Eigen::MatrixXd cov = covariance;
  std::vector<bool> missing(static_cast<std::size_t>(cov.rows()), false);
  for (Eigen::Index j = 0; j < cov.rows(); ++j)
    missing[static_cast<std::size_t>(j)] = !std::isfinite(cov(j, j));
  for (Eigen::Index a = 0; a < cov.rows(); ++a)
    for (Eigen::Index b = 0; b < cov.cols(); ++b)
      if (!std::isfinite(cov(a, b))) cov(a, b) = 0.0;

  out.covariance = jac * cov * jac.transpose();
  out.covariance = (0.5 * (out.covariance + out.covariance.transpose())).eval();
  for (Eigen::Index r = 0; r < jac.rows(); ++r) {
    bool tainted = false;
    for (Eigen::Index j = 0; j < jac.cols(); ++j)
      tainted = tainted || (missing[static_cast<std::size_t>(j)] && jac(r, j) != 0.0);
    if (tainted) {
      out.covariance.row(r).setConstant(std::nan(""));
      out.covariance.col(r).setConstant(std::nan(""));
    }
  }
  out.se = out.covariance.diagonal().cwiseMax(0.0).cwiseSqrt();
  for (Eigen::Index r = 0; r < out.se.size(); ++r)
    if (!std::isfinite(out.covariance(r, r))) out.se[r] = std::nan("");
  return out;
}

RecoveredParams delta_method(const TobitFit& fit) {
  if (fit.covariates() != kReducedFormCovariates)
    throw std::invalid_argument("structural recovery needs the six-covariate pooled design");
  if (!fit.converged) throw std::invalid_argument("fit did not converge:\n" + fit.diagnostics);

  RecoveredParams out;
  out.theta = fit.params.head<6>();
  out.theta_cov = fit.covariance.topLeftCorner<6, 6>();
  const Transform t{[](const Eigen::VectorXd& x) -> Eigen::VectorXd { return recover(Vector6(x)); },
                    [](const Eigen::VectorXd& x) -> Eigen::MatrixXd {
                      return recover_jacobian(Vector6(x));
                    }};
  const DeltaMethodResult d = delta_method(out.theta, out.theta_cov, t);
  out.estimate = d.estimate;
  out.se = d.se;
  out.cov = d.covariance;
  return out;
}

std::string_view to_string(TestScale s) { return s == TestScale::beta ? "beta" : "theta"; }

std::string Hypothesis::label() const {
  if (kind == Kind::equals_one) return std::string(param_name(p)) + " = 1";
  return std::string(param_name(p)) + " = " + std::string(param_name(q));
}

namespace {

// Linear form a' theta whose zero is equivalent to the hypothesis on theta scale.
Vector6 theta_contrast(const Hypothesis& h) {
  auto row_of = [](Param p) -> Vector6 {
    if (p == Param::alpha)
      throw std::domain_error("alpha = 1 has no finite reduced-form counterpart");
    Vector6 v;
    const auto& w = kExponentWeights[static_cast<std::size_t>(p)];
    v << w[0], w[1], w[2], w[3], w[4], w[5];
    return v;
  };
  if (h.kind == Hypothesis::Kind::equals_one) return row_of(h.p);
  if (h.p == Param::alpha || h.q == Param::alpha || h.p == Param::delta || h.q == Param::delta)
    throw std::domain_error("pairwise theta-scale tests are defined between betas only");
  return row_of(h.p) - row_of(h.q);
}

WaldTest finish(std::string label, double contrast, double variance, TestScale scale) {
  WaldTest t;
  t.hypothesis = std::move(label);
  t.contrast = contrast;
  t.scale = scale;
  if (!std::isfinite(contrast) || !std::isfinite(variance))
    throw std::domain_error("covariance unavailable for " + t.hypothesis);
  if (contrast == 0.0) {
    t.statistic = 0.0;
    t.p_value = 1.0;
    return t;
  }
  if (!(variance > 0.0))
    throw std::domain_error("zero variance with nonzero contrast for " + t.hypothesis);
  t.statistic = contrast * contrast / variance;
  t.p_value = normal::chi2_1_upper_tail(t.statistic);
  return t;
}

} // namespace

WaldTest wald_test(const RecoveredParams& params, const Hypothesis& null, TestScale scale) {
  if (scale == TestScale::theta) {
    const Vector6 a = theta_contrast(null);
    double contrast = a.dot(params.theta);
    if (std::abs(contrast) < 1e-15 * (1.0 + params.theta.cwiseAbs().maxCoeff())) contrast = 0.0;
    // Avoid 0 * NaN from unidentified coefficients outside the contrast.
    double variance = 0.0;
    for (Eigen::Index i = 0; i < 6; ++i)
      for (Eigen::Index j = 0; j < 6; ++j)
        if (a[i] != 0.0 && a[j] != 0.0) variance += a[i] * a[j] * params.theta_cov(i, j);
    return finish(null.label(), contrast, variance, scale);
  }
  const auto p = static_cast<Eigen::Index>(null.p);
  const auto q = static_cast<Eigen::Index>(null.q);
  if (null.kind == Hypothesis::Kind::equals_one)
    return finish(null.label(), params.estimate[p] - 1.0, params.cov(p, p), scale);
  return finish(null.label(), params.estimate[p] - params.estimate[q],
                params.cov(p, p) + params.cov(q, q) - 2.0 * params.cov(p, q), scale);
}

std::vector<WaldTest> hypothesis_battery(const RecoveredParams& params, TestScale scale) {
  std::vector<Hypothesis> nulls;
  for (Param p : kBetaParams) nulls.push_back(Hypothesis::equals_one(p));
  // Pairs in report-grid order: each row parameter against those above it.
  const std::array<Param, 4> rows{Param::beta_crcd, Param::beta_cr, Param::beta_cd, Param::beta};
  const std::array<Param, 3> cols{Param::beta, Param::beta_cd, Param::beta_cr};
  for (Param r : rows)
    for (Param c : cols) {
      if (r == c) break;
      nulls.push_back(Hypothesis::equals(r, c));
    }
  std::vector<WaldTest> out;
  for (const Hypothesis& h : nulls) {
    const bool available =
        std::isfinite(params.se_of(h.p)) && std::isfinite(params.se_of(h.q));
    if (available) out.push_back(wald_test(params, h, scale));
  }
  return out;
}

} // namespace qhd
