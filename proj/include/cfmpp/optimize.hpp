#ifndef CFMPP_OPTIMIZE_HPP
#define CFMPP_OPTIMIZE_HPP

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace cfmpp {

struct FitResult {
  std::vector<double> theta;
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
  std::string scheme;  ///< mle-temporal | mle-janossy | pseudo | least-squares | optimize
};

struct OptimizeOptions {
  int max_evaluations = 20000;
  double relative_tolerance = 1e-8;   ///< on the spread of objective values
  double parameter_tolerance = 1e-10; ///< on the simplex diameter, relative to 1 + |theta|
  int restarts = 1;
};

using Objective = std::function<double(std::span<const double>)>;

/// Minimizes `objective` by a Nelder-Mead simplex search projected onto the box
/// [lower, upper]. Deterministic in (theta0, bounds, options); the returned
/// point is never worse than theta0. `converged` is false when the budget ran
/// out before the stopping rule held.
FitResult optimize(const Objective& objective, std::vector<double> theta0, const std::vector<double>& lower,
                   const std::vector<double>& upper, const OptimizeOptions& options = {});

}  // namespace cfmpp

#endif  // CFMPP_OPTIMIZE_HPP
