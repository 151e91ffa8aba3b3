#include "qhd/tobit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <unordered_map>

#include "qhd/normal.hpp"

namespace qhd {

void TobitData::add_row(std::span<const double> x, double y, Censoring censoring, double lower,
                        double upper, int cluster) {
  if (x.size() != p_) throw std::invalid_argument("covariate row has wrong length");
  if (!(lower < upper)) throw std::invalid_argument("censoring limits must satisfy lower < upper");
  x_.insert(x_.end(), x.begin(), x.end());
  y_.push_back(y);
  lower_.push_back(lower);
  upper_.push_back(upper);
  censoring_.push_back(censoring);
  cluster_.push_back(cluster);
}

std::size_t TobitData::count(Censoring c) const {
  return static_cast<std::size_t>(std::count(censoring_.begin(), censoring_.end(), c));
}

std::vector<int> TobitData::cluster_ids() const {
  std::vector<int> ids(cluster_);
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

std::vector<std::size_t> TobitData::support() const {
  std::vector<std::size_t> s(p_, 0);
  for (std::size_t i = 0; i < rows(); ++i)
    for (std::size_t j = 0; j < p_; ++j) s[j] += x_[i * p_ + j] != 0.0 ? 1 : 0;
  return s;
}

double tobit_row_loglik(const TobitData& data, std::size_t i, const Eigen::VectorXd& params,
                        double* score) {
  const std::size_t p = data.covariates();
  const auto x = data.x(i);
  const double log_sigma = params[static_cast<Eigen::Index>(p)];
  const double sigma = std::exp(log_sigma);
  double mu = 0.0;
  for (std::size_t j = 0; j < p; ++j) mu += x[j] * params[static_cast<Eigen::Index>(j)];

  double ll = 0.0;
  double d_mu = 0.0;     // d ll / d mu
  double d_logsig = 0.0; // d ll / d ln sigma
  switch (data.censoring(i)) {
  case Censoring::interior: {
    const double z = (data.y(i) - mu) / sigma;
    ll = normal::log_pdf(z) - log_sigma;
    d_mu = z / sigma;
    d_logsig = z * z - 1.0;
    break;
  }
  case Censoring::at_lower: {
    const double z = (data.lower(i) - mu) / sigma;
    const normal::LogCdf t = normal::log_cdf(z);
    ll = t.log_cdf;
    d_mu = -t.hazard / sigma;
    d_logsig = -t.hazard * z;
    break;
  }
  case Censoring::at_upper: {
    const double z = (data.upper(i) - mu) / sigma;
    const normal::LogCdf t = normal::log_cdf(-z);
    ll = t.log_cdf;
    d_mu = t.hazard / sigma;
    d_logsig = t.hazard * z;
    break;
  }
  }
  for (std::size_t j = 0; j < p; ++j) score[j] += d_mu * x[j];
  score[p] += d_logsig;
  return ll;
}

namespace {

bool finite_params(const Eigen::VectorXd& params) { return params.allFinite(); }

LogLikelihood non_finite(std::size_t n) {
  return {-std::numeric_limits<double>::infinity(), Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n))};
}

LogLikelihood checked(LogLikelihood out) {
  if (!std::isfinite(out.value) || !out.gradient.allFinite())
    return non_finite(static_cast<std::size_t>(out.gradient.size()));
  return out;
}

} // namespace

LogLikelihood tobit_loglik_serial(const TobitData& data, const Eigen::VectorXd& params) {
  const std::size_t k = data.parameters();
  if (static_cast<std::size_t>(params.size()) != k)
    throw std::invalid_argument("parameter vector has wrong length");
  if (!finite_params(params)) return non_finite(k);
  LogLikelihood out{0.0, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(k))};
  for (std::size_t i = 0; i < data.rows(); ++i)
    out.value += tobit_row_loglik(data, i, params, out.gradient.data());
  return checked(std::move(out));
}

LogLikelihood tobit_loglik_parallel(const TobitData& data, const Eigen::VectorXd& params) {
  const std::size_t k = data.parameters();
  if (static_cast<std::size_t>(params.size()) != k)
    throw std::invalid_argument("parameter vector has wrong length");
  if (!finite_params(params)) return non_finite(k);

  const std::size_t n = data.rows();
  const std::size_t chunks = (n + kLoglikChunkRows - 1) / kLoglikChunkRows;
  // Column c holds (gradient..., value) of chunk c.
  Eigen::MatrixXd partial = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(k + 1),
                                                  static_cast<Eigen::Index>(chunks));
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(chunks); ++c) {
    double* col = partial.col(c).data();
    const std::size_t begin = static_cast<std::size_t>(c) * kLoglikChunkRows;
    const std::size_t end = std::min(n, begin + kLoglikChunkRows);
    double value = 0.0;
    for (std::size_t i = begin; i < end; ++i) value += tobit_row_loglik(data, i, params, col);
    col[k] = value;
  }

  LogLikelihood out{0.0, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(k))};
  for (std::size_t c = 0; c < chunks; ++c) {
    out.gradient += partial.col(static_cast<Eigen::Index>(c)).head(static_cast<Eigen::Index>(k));
    out.value += partial(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(c));
  }
  return checked(std::move(out));
}

Eigen::MatrixXd tobit_cluster_scores(const TobitData& data, const Eigen::VectorXd& params) {
  const std::vector<int> ids = data.cluster_ids();
  std::unordered_map<int, Eigen::Index> slot;
  for (std::size_t g = 0; g < ids.size(); ++g) slot[ids[g]] = static_cast<Eigen::Index>(g);

  const auto k = static_cast<Eigen::Index>(data.parameters());
  // Column-per-cluster so each row's score is accumulated contiguously.
  Eigen::MatrixXd scores = Eigen::MatrixXd::Zero(k, static_cast<Eigen::Index>(ids.size()));
  for (std::size_t i = 0; i < data.rows(); ++i)
    tobit_row_loglik(data, i, params, scores.col(slot.at(data.cluster(i))).data());
  return scores.transpose();
}

} // namespace qhd
