#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "qhd/core_model.hpp"

namespace qhd {

// Row-major design for a two-limit Tobit with observation-specific limits.
// Parameters are laid out as (coefficients..., ln sigma).
class TobitData {
public:
  explicit TobitData(std::size_t n_covariates) : p_(n_covariates) {}

  void add_row(std::span<const double> x, double y, Censoring censoring, double lower,
               double upper, int cluster);

  std::size_t rows() const { return y_.size(); }
  std::size_t covariates() const { return p_; }
  std::size_t parameters() const { return p_ + 1; }

  std::span<const double> x(std::size_t i) const { return {&x_[i * p_], p_}; }
  double y(std::size_t i) const { return y_[i]; }
  double lower(std::size_t i) const { return lower_[i]; }
  double upper(std::size_t i) const { return upper_[i]; }
  Censoring censoring(std::size_t i) const { return censoring_[i]; }
  int cluster(std::size_t i) const { return cluster_[i]; }

  std::size_t count(Censoring c) const;
  // Distinct cluster ids in ascending order.
  std::vector<int> cluster_ids() const;
  // Number of rows with a nonzero entry in each covariate column.
  std::vector<std::size_t> support() const;

private:
  std::size_t p_;
  std::vector<double> x_;
  std::vector<double> y_;
  std::vector<double> lower_;
  std::vector<double> upper_;
  std::vector<Censoring> censoring_;
  std::vector<int> cluster_;
};

struct LogLikelihood {
  double value = 0.0;
  Eigen::VectorXd gradient; // d/d(coefficients, ln sigma)
};

// Contribution of row i; adds its score into `score` (length p + 1).
double tobit_row_loglik(const TobitData& data, std::size_t i, const Eigen::VectorXd& params,
                        double* score);

// Row-by-row reference. Returns -inf with a zero gradient for non-finite input.
LogLikelihood tobit_loglik_serial(const TobitData& data, const Eigen::VectorXd& params);

// OpenMP version. Rows are reduced in fixed-size chunks combined in chunk
// order, so the result does not depend on the thread count.
LogLikelihood tobit_loglik_parallel(const TobitData& data, const Eigen::VectorXd& params);

inline constexpr std::size_t kLoglikChunkRows = 1024;

// Per-cluster score sums, one row per cluster in cluster_ids() order.
Eigen::MatrixXd tobit_cluster_scores(const TobitData& data, const Eigen::VectorXd& params);

} // namespace qhd
