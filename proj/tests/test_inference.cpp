#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "qhd/estimator.hpp"
#include "qhd/inference.hpp"
#include "qhd/normal.hpp"
#include "qhd/simulator.hpp"

using namespace qhd;

namespace {

Vector6 theta_of(double delay, double lnrate, double present, double cr = 0, double cd = 0,
                 double crcd = 0) {
  Vector6 t;
  t << delay, lnrate, present, cr, cd, crcd;
  return t;
}

RecoveredParams fitted_truth(int base, std::uint64_t seed) {
  const auto recs = simulate_panel(PopulationSpec::reference_truth(base, seed));
  return delta_method(fit_records(recs, 10.0));
}

} // namespace

TEST_CASE("zero log-coefficients recover unit betas") {
  const Vector6 s = recover(theta_of(-0.05, -3.5, 0.0));
  for (Param p : kBetaParams) CHECK(s[static_cast<Eigen::Index>(p)] == 1.0);
}

TEST_CASE("recovery at the reference point") {
  // Forward from (delta, alpha) = (0.986, 1.282) gives theta_lnrate = -1/0.282 and
  // theta_delay = ln(0.986)/0.282; the rounded values below come from that.
  CHECK(-1.0 / 0.282 == doctest::Approx(-3.546).epsilon(1e-3));
  CHECK(std::log(0.986) / 0.282 == doctest::Approx(-0.0500).epsilon(1e-2));
  const Vector6 s = recover(theta_of(-0.0500, -3.546, -1.926));
  CHECK(s[4] == doctest::Approx(0.986).epsilon(1e-3));
  CHECK(s[5] == doctest::Approx(1.282).epsilon(1e-3));
  CHECK(s[0] == doctest::Approx(0.581).epsilon(1e-3));
  // Exact forward/backward agreement.
  Vector6 truth;
  truth << 1.009, 0.921, 0.679, 0.581, 0.986, 1.282;
  CHECK((recover(reduced_form(truth)) - truth).lpNorm<Eigen::Infinity>() < 1e-14);
}

TEST_CASE("recovery requires a negative rate coefficient") {
  CHECK_THROWS_AS(recover(theta_of(-0.05, 0.0, 0.0)), std::domain_error);
  CHECK_THROWS_AS(recover(theta_of(-0.05, 0.4, 0.0)), std::domain_error);
  CHECK_THROWS_AS(recover_jacobian(theta_of(-0.05, 0.4, 0.0)), std::domain_error);
}

TEST_CASE("theta round trip over random draws") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> coef(-2.0, 2.0), lnrate(-10.0, -0.1);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const Vector6 t = theta_of(coef(rng) * 0.1, lnrate(rng), coef(rng), coef(rng), coef(rng), coef(rng));
    const Vector6 back = reduced_form(recover(t));
    for (Eigen::Index j = 0; j < 6; ++j)
      worst = std::max(worst, std::abs(back[j] - t[j]) / std::max(1.0, std::abs(t[j])));
  }
  CHECK(worst < 1e-12);
}

TEST_CASE("analytic recovery Jacobian matches finite differences") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> coef(-1.0, 1.0), lnrate(-6.0, -0.5);
  for (int i = 0; i < 50; ++i) {
    const Vector6 t = theta_of(0.1 * coef(rng), lnrate(rng), coef(rng), coef(rng), coef(rng), coef(rng));
    const Matrix6 jac = recover_jacobian(t);
    for (Eigen::Index r = 0; r < 6; ++r) {
      const auto f = [&](const Eigen::VectorXd& x) { return recover(Vector6(x))[r]; };
      const Eigen::VectorXd fd = oracle::fd_gradient(f, t, 1e-6);
      for (Eigen::Index j = 0; j < 6; ++j) CHECK(oracle::relative_error(jac(r, j), fd[j]) < 1e-7);
    }
  }
}

TEST_CASE("delta method: identity and linear maps are exact") {
  Eigen::MatrixXd cov(3, 3);
  cov << 4.0, 1.0, 0.5, 1.0, 2.0, 0.3, 0.5, 0.3, 1.0;
  Eigen::VectorXd x(3);
  x << 1.0, -2.0, 0.5;
  const Transform identity{[](const Eigen::VectorXd& v) { return v; },
                           [](const Eigen::VectorXd& v) -> Eigen::MatrixXd {
                             return Eigen::MatrixXd::Identity(v.size(), v.size());
                           }};
  const DeltaMethodResult id = delta_method(x, cov, identity);
  CHECK(id.covariance == cov);
  CHECK(id.estimate == x);

  for (double c : {-3.0, 0.25, 7.0}) {
    const Transform lin{[c](const Eigen::VectorXd& v) -> Eigen::VectorXd { return c * v; },
                        [c](const Eigen::VectorXd& v) -> Eigen::MatrixXd {
                          return c * Eigen::MatrixXd::Identity(v.size(), v.size());
                        }};
    const DeltaMethodResult d = delta_method(x, cov, lin);
    for (Eigen::Index j = 0; j < 3; ++j) CHECK(d.se[j] == doctest::Approx(std::abs(c) * std::sqrt(cov(j, j))).epsilon(1e-15));
  }
}

TEST_CASE("delta method marks outputs that load on unidentified inputs") {
  Eigen::MatrixXd cov = Eigen::MatrixXd::Identity(2, 2);
  cov(1, 1) = std::nan("");
  const Transform t{[](const Eigen::VectorXd& v) -> Eigen::VectorXd {
                      Eigen::VectorXd o(2);
                      o << 2 * v[0], v[0] + v[1];
                      return o;
                    },
                    [](const Eigen::VectorXd&) -> Eigen::MatrixXd {
                      Eigen::MatrixXd j(2, 2);
                      j << 2, 0, 1, 1;
                      return j;
                    }};
  const DeltaMethodResult d = delta_method(Eigen::VectorXd::Zero(2), cov, t);
  CHECK(d.se[0] == doctest::Approx(2.0));
  CHECK(std::isnan(d.se[1]));
}

TEST_CASE("Wald test invariants") {
  RecoveredParams rp;
  rp.estimate << 1.0, 0.9, 0.7, 0.7, 0.98, 1.3;
  rp.cov = Matrix6::Identity() * 0.01;
  rp.cov(2, 3) = rp.cov(3, 2) = 0.004;
  rp.se = rp.cov.diagonal().cwiseSqrt();
  rp.theta = reduced_form(rp.estimate);
  rp.theta_cov = Matrix6::Identity() * 0.02;

  const WaldTest zero = wald_test(rp, Hypothesis::equals_one(Param::beta));
  CHECK(zero.statistic == 0.0);
  CHECK(zero.p_value == 1.0);
  const WaldTest same = wald_test(rp, Hypothesis::equals(Param::beta_cr, Param::beta_crcd));
  CHECK(same.statistic == 0.0);
  CHECK(same.p_value == 1.0);

  const WaldTest ab = wald_test(rp, Hypothesis::equals(Param::beta, Param::beta_cr));
  const WaldTest ba = wald_test(rp, Hypothesis::equals(Param::beta_cr, Param::beta));
  CHECK(ab.statistic == ba.statistic);
  CHECK(ab.contrast == -ba.contrast);
  CHECK(ab.statistic == doctest::Approx(0.09 / 0.02));
  CHECK(ab.hypothesis == "beta = beta_cr");

  double previous = 1.0;
  for (double stat = 0.01; stat < 60.0; stat *= 1.5) {
    const double p = normal::chi2_1_upper_tail(stat);
    CHECK(p < previous);
    previous = p;
  }
  CHECK(normal::chi2_1_upper_tail(3.841458820694124) == doctest::Approx(0.05).epsilon(1e-9));

  rp.cov(0, 0) = 0.0;
  rp.estimate[0] = 1.1;
  CHECK_THROWS_AS(wald_test(rp, Hypothesis::equals_one(Param::beta)), std::domain_error);
  CHECK_THROWS_AS(wald_test(rp, Hypothesis::equals_one(Param::alpha), TestScale::theta), std::domain_error);
}

TEST_CASE("theta-scale tests are linear restrictions") {
  RecoveredParams rp;
  rp.theta = theta_of(-0.05, -3.5, -0.1, -1.2, -0.4, 0.2);
  rp.theta_cov = Matrix6::Identity() * 0.01;
  rp.theta_cov(3, 5) = rp.theta_cov(5, 3) = -0.002;
  rp.estimate = recover(rp.theta);
  rp.cov = Matrix6::Identity();
  rp.se = Vector6::Ones();
  // beta_crcd = beta  <=>  cr + cd + crcd = 0.
  const WaldTest t = wald_test(rp, Hypothesis::equals(Param::beta_crcd, Param::beta), TestScale::theta);
  CHECK(t.contrast == doctest::Approx(-1.4));
  CHECK(t.statistic == doctest::Approx(1.96 / (0.03 - 0.004)));
  CHECK(t.scale == TestScale::theta);
}

TEST_CASE("battery has the report grid shape") {
  RecoveredParams rp;
  rp.estimate << 0.8, 0.8, 0.8, 0.8, 0.99, 1.3;
  rp.cov = Matrix6::Identity() * 0.01;
  rp.se = rp.cov.diagonal().cwiseSqrt();
  const auto tests = hypothesis_battery(rp);
  REQUIRE(tests.size() == 10);
  for (std::size_t i = 4; i < 10; ++i) CHECK(tests[i].p_value == 1.0);
  for (std::size_t i = 0; i < 4; ++i) CHECK(tests[i].p_value < 0.05);
  CHECK(tests[4].hypothesis == "beta_crcd = beta");
  CHECK(tests[9].hypothesis == "beta_cd = beta");
}

TEST_CASE("simulated reference truths reproduce the headline tests") {
  const RecoveredParams rp = fitted_truth(500, 31);
  const WaldTest crcd_one = wald_test(rp, Hypothesis::equals_one(Param::beta_crcd));
  CHECK(crcd_one.p_value < 0.01);
  CHECK(crcd_one.contrast < 0.0);
  // Among pairwise tests involving beta_crcd, equality with beta_cr is the least rejected.
  const double p_cr = wald_test(rp, Hypothesis::equals(Param::beta_crcd, Param::beta_cr)).p_value;
  CHECK(p_cr > wald_test(rp, Hypothesis::equals(Param::beta_crcd, Param::beta)).p_value);
  CHECK(p_cr > wald_test(rp, Hypothesis::equals(Param::beta_crcd, Param::beta_cd)).p_value);
  CHECK(rp[Param::beta_crcd] < rp[Param::beta]);
}

TEST_CASE("size of the beta = 1 test on baseline-only panels") {
  // 200 replications; under the null the rejection count is Binomial(200, 0.05),
  // whose 3-SD band is [1, 19].
  int rejections = 0;
  for (int rep = 0; rep < 200; ++rep) {
    PopulationSpec spec = PopulationSpec::reference_truth(0, 5000 + rep);
    spec.cell_sizes = {150, 0, 0, 0};
    for (auto& p : spec.prefs_by_cell) p.beta = 1.0;
    const RecoveredParams rp = delta_method(fit_records(simulate_panel(spec), 10.0));
    rejections += wald_test(rp, Hypothesis::equals_one(Param::beta)).p_value < 0.05;
    CHECK(hypothesis_battery(rp).size() == 1);
  }
  MESSAGE("rejections: ", rejections, " / 200");
  CHECK(rejections >= 1);
  CHECK(rejections <= 19);
}

TEST_CASE("delta method needs a converged pooled fit") {
  TobitFit f;
  f.params = Eigen::VectorXd::Zero(3);
  f.converged = true;
  CHECK_THROWS_AS(delta_method(f), std::invalid_argument);
  f.params = Eigen::VectorXd::Zero(7);
  f.converged = false;
  CHECK_THROWS_AS(delta_method(f), std::invalid_argument);
}
