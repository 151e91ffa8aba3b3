#pragma once

#include <array>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "qhd/estimator.hpp"

namespace qhd {

// Order of the recovered structural parameters.
enum class Param { beta = 0, beta_cd, beta_cr, beta_crcd, delta, alpha };
inline constexpr std::size_t kStructuralParams = 6;
inline constexpr std::array<Param, 4> kBetaParams{Param::beta, Param::beta_cd, Param::beta_cr,
                                                  Param::beta_crcd};
std::string_view param_name(Param p);

using Vector6 = Eigen::Matrix<double, 6, 1>;
using Matrix6 = Eigen::Matrix<double, 6, 6>;

// Structural parameters from reduced-form coefficients (delay, lnrate, present,
// cr, cd, crcd). Throws std::domain_error unless theta_lnrate < 0.
Vector6 recover(const Vector6& theta);
Vector6 recover(const ThetaVector& theta);
// d recover / d theta.
Matrix6 recover_jacobian(const Vector6& theta);
// Inverse of recover.
Vector6 reduced_form(const Vector6& structural);

// A differentiable map with its Jacobian.
struct Transform {
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> value;
  std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> jacobian;
};

struct DeltaMethodResult {
  Eigen::VectorXd estimate;
  Eigen::VectorXd se;
  Eigen::MatrixXd covariance;
};

DeltaMethodResult delta_method(const Eigen::VectorXd& point, const Eigen::MatrixXd& covariance,
                               const Transform& transform);

struct RecoveredParams {
  Vector6 estimate = Vector6::Zero();
  Vector6 se = Vector6::Zero();
  Matrix6 cov = Matrix6::Zero();
  // Reduced-form point and covariance, kept for tests on the theta scale.
  Vector6 theta = Vector6::Zero();
  Matrix6 theta_cov = Matrix6::Zero();

  double operator[](Param p) const { return estimate[static_cast<Eigen::Index>(p)]; }
  double se_of(Param p) const { return se[static_cast<Eigen::Index>(p)]; }
};

// Delta-method standard errors of the recovered parameters of a pooled fit.
// Throws std::invalid_argument for a fit that did not converge or is not a
// six-covariate pooled fit.
RecoveredParams delta_method(const TobitFit& fit);

enum class TestScale { beta, theta };
std::string_view to_string(TestScale s);

struct Hypothesis {
  enum class Kind { equals_one, equals } kind = Kind::equals_one;
  Param p = Param::beta;
  Param q = Param::beta;

  static Hypothesis equals_one(Param p) { return {Kind::equals_one, p, p}; }
  static Hypothesis equals(Param p, Param q) { return {Kind::equals, p, q}; }
  std::string label() const;
};

struct WaldTest {
  std::string hypothesis;
  double contrast = 0.0; // signed; p - 1 or p - q on the tested scale
  double statistic = 0.0;
  double p_value = 1.0;
  TestScale scale = TestScale::beta;
};

// Chi-square(1) Wald test. On the theta scale a beta hypothesis becomes the
// equivalent linear restriction on the reduced-form coefficients.
// Throws std::domain_error when the contrast has zero variance but is nonzero,
// or when the needed covariance entries are not finite.
WaldTest wald_test(const RecoveredParams& params, const Hypothesis& null,
                   TestScale scale = TestScale::beta);

// Each beta equal to one, then each pair of betas equal. Tests whose
// covariance entries are unavailable (unidentified cells) are skipped.
std::vector<WaldTest> hypothesis_battery(const RecoveredParams& params,
                                         TestScale scale = TestScale::beta);

} // namespace qhd
