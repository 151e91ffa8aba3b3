#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "qhd/core_model.hpp"
#include "qhd/simulator.hpp"
#include "qhd/tobit.hpp"

namespace qhd {

inline constexpr std::size_t kReducedFormCovariates = 6;
inline constexpr std::array<std::string_view, kReducedFormCovariates> kCovariateNames{
    "theta_delay", "theta_lnrate", "theta_present", "theta_cr", "theta_cd", "theta_crcd"};

// Reduced-form coefficients of the pooled regression plus the latent noise scale.
struct ThetaVector {
  double delay = 0.0;
  double lnrate = -1.0;
  double present = 0.0;
  double cr = 0.0;
  double cd = 0.0;
  double crcd = 0.0;
  double sigma = 1.0;

  Eigen::VectorXd coefficients() const;
  // (coefficients..., ln sigma), the optimizer's parameterization.
  Eigen::VectorXd params() const;
  static ThetaVector from_params(const Eigen::VectorXd& params);
  // Reduced form implied by structural preferences, with one beta per cell
  // ordered baseline, CD, CR, CR+CD.
  static ThetaVector from_structural(const std::array<double, 4>& betas, double delta,
                                     double alpha, double sigma);
};

struct DesignRow {
  Censoring censoring = Censoring::interior;
  double log_ratio = 0.0; // observed E for interior rows, the limit otherwise
  std::array<double, kReducedFormCovariates> covariates{};
  CensorLimits limits;
  int cluster = 0;
};

// Throws std::invalid_argument for a hypothetical (non-incentivized) record.
DesignRow build_design_row(const DecisionRecord& record, double omega,
                           double budget = kDefaultBudget, int delay_days = kDefaultDelayDays);

// Design over the incentivized rows of `records`; hypothetical rows are rejected.
TobitData build_design(std::span<const DecisionRecord> records, double omega,
                       double budget = kDefaultBudget, int delay_days = kDefaultDelayDays);

struct FitOptions {
  int restarts = 4;
  std::uint64_t restart_seed = 0x7E57ULL;
  bool cluster_correction = true; // multiply the meat by G/(G-1)
  bool parallel = true;
  double gradient_tolerance = 1e-8;
  double step_tolerance = 1e-10;
  double hessian_step = 1e-5; // relative central-difference step
};

struct TobitFit {
  Eigen::VectorXd params;     // (coefficients..., ln sigma)
  Eigen::MatrixXd covariance; // cluster-robust, same layout; NaN where unidentified
  double loglik = 0.0;
  std::size_t n_obs = 0;
  std::size_t n_left = 0;
  std::size_t n_right = 0;
  std::size_t n_clusters = 0;
  bool converged = false;
  std::string diagnostics;
  std::vector<std::size_t> support; // rows with a nonzero entry, per covariate
  std::vector<double> start_logliks;    // endpoint of each start, default start first
  int iterations = 0;
  FitOptions options;

  std::size_t covariates() const { return static_cast<std::size_t>(params.size()) - 1; }
  double sigma() const { return std::exp(params[params.size() - 1]); }
  bool identified(std::size_t j) const { return support[j] > 0; }
  // Only valid for the six-covariate pooled design.
  ThetaVector theta() const { return ThetaVector::from_params(params); }
  Eigen::VectorXd standard_errors() const { return covariance.diagonal().cwiseSqrt(); }
};

// OLS of the interior rows on the identified columns, with the interior residual
// scale; the default start of `fit`.
Eigen::VectorXd default_start(const TobitData& data);

// Maximum-likelihood fit with a cluster-robust sandwich covariance. Throws
// std::invalid_argument for unusable data (fewer than two clusters, no interior
// rows, or every row censored in one direction).
TobitFit fit(const TobitData& data, const FitOptions& options = {},
             std::optional<Eigen::VectorXd> start = std::nullopt);

TobitFit fit_records(std::span<const DecisionRecord> records, double omega,
                     const FitOptions& options = {}, double budget = kDefaultBudget,
                     int delay_days = kDefaultDelayDays);

// Central-difference Hessian of the log-likelihood from its analytic gradient.
Eigen::MatrixXd numerical_hessian(const TobitData& data, const Eigen::VectorXd& params,
                                  double relative_step, bool parallel);

} // namespace qhd
