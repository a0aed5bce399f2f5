#include "cfmpp/gaussian.hpp"

#include <cmath>

namespace cfmpp {

namespace {

double correlation(CovarianceKernel::Family family, double distance, double scale) {
  const double r = distance / scale;
  switch (family) {
    case CovarianceKernel::Family::Exponential: return std::exp(-r);
    case CovarianceKernel::Family::Gaussian: return std::exp(-r * r);
  }
  return 0.0;
}

}  // namespace

void CovarianceKernel::validate() const {
  if (!(variance >= 0.0) || !std::isfinite(variance)) {
    throw ValidationError("kernel: variance must be finite and >= 0");
  }
  if (!(spatial_scale > 0.0) || !(temporal_scale > 0.0)) {
    throw ValidationError("kernel: correlation scales must be positive");
  }
}

double CovarianceKernel::operator()(const Location& a, const Location& b,
                                    const Window* window) const {
  double d = 0.0;
  if (window) {
    d = window->spatial_distance(a.x, b.x);
  } else {
    for (std::size_t i = 0; i < a.x.size(); ++i) d += (a.x[i] - b.x[i]) * (a.x[i] - b.x[i]);
    d = std::sqrt(d);
  }
  double c = variance * correlation(family, d, spatial_scale);
  if (a.t && b.t) c *= correlation(temporal_family, std::abs(*a.t - *b.t), temporal_scale);
  return c;
}

Eigen::MatrixXd covariance_matrix(const CovarianceKernel& kernel,
                                  const std::vector<Location>& sites, const Window* window) {
  const auto n = static_cast<Eigen::Index>(sites.size());
  Eigen::MatrixXd cov(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    cov(i, i) = kernel(sites[i], sites[i], window);
    for (Eigen::Index j = 0; j < i; ++j) {
      const double c = kernel(sites[i], sites[j], window);
      cov(i, j) = c;
      cov(j, i) = c;
    }
  }
  return cov;
}

GaussianSampler::GaussianSampler(const Eigen::MatrixXd& covariance, std::vector<double> mean,
                                 double tolerance)
    : mean_(std::move(mean)) {
  const Eigen::Index n = covariance.rows();
  if (covariance.cols() != n || static_cast<std::size_t>(n) != mean_.size()) {
    throw ValidationError("gaussian: covariance / mean dimensions disagree");
  }
  if (n == 0) return;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(covariance);
  if (ldlt.info() != Eigen::Success) {
    throw NumericalError("gaussian: covariance factorization failed");
  }
  Eigen::VectorXd d = ldlt.vectorD();
  const double scale = std::max(1.0, covariance.diagonal().cwiseAbs().maxCoeff());
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!std::isfinite(d(i)) || d(i) < -tolerance * scale) {
      throw NumericalError("gaussian: covariance is not positive semi-definite");
    }
    d(i) = std::sqrt(std::max(d(i), 0.0));
  }
  Eigen::MatrixXd lower = ldlt.matrixL();
  Eigen::MatrixXd scaled = lower * d.asDiagonal();
  factor_ = ldlt.transpositionsP().transpose() * scaled;
}

std::vector<double> GaussianSampler::draw(Rng& rng) const {
  const auto n = static_cast<Eigen::Index>(mean_.size());
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd z(n);
  for (Eigen::Index i = 0; i < n; ++i) z(i) = normal(rng);
  std::vector<double> out(mean_);
  if (n == 0) return out;
  const Eigen::VectorXd x = factor_ * z;
  for (Eigen::Index i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] += x(i);
  return out;
}

}  // namespace cfmpp
