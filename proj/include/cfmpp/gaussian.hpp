#ifndef CFMPP_GAUSSIAN_HPP
#define CFMPP_GAUSSIAN_HPP

#include <vector>

#include <Eigen/Dense>

#include "cfmpp/core.hpp"
#include "cfmpp/random.hpp"

namespace cfmpp {

/// Separable stationary covariance sigma^2 c_s(|x - x'|) c_t(|t - t'|).
struct CovarianceKernel {
  enum class Family { Exponential, Gaussian };

  Family family = Family::Exponential;
  double variance = 1.0;
  double spatial_scale = 0.1;
  Family temporal_family = Family::Exponential;
  double temporal_scale = 1.0;

  /// Spatial distance is taken in the window's metric (torus aware) when given.
  double operator()(const Location& a, const Location& b, const Window* window = nullptr) const;
  void validate() const;
};

/// Draws from N(mean, covariance) through a pivoted LDL^T factorization of a
/// dense positive semi-definite covariance.
class GaussianSampler {
 public:
  GaussianSampler(const Eigen::MatrixXd& covariance, std::vector<double> mean,
                  double tolerance = 1e-9);

  std::size_t dimension() const { return mean_.size(); }
  std::vector<double> draw(Rng& rng) const;

 private:
  std::vector<double> mean_;
  Eigen::MatrixXd factor_;  // covariance = factor_ * factor_^T
};

Eigen::MatrixXd covariance_matrix(const CovarianceKernel& kernel,
                                  const std::vector<Location>& sites,
                                  const Window* window = nullptr);

}  // namespace cfmpp

#endif  // CFMPP_GAUSSIAN_HPP
