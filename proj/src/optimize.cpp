#include "cfmpp/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "cfmpp/core.hpp"

namespace cfmpp {

namespace {

struct Search {
  const Objective& objective;
  const std::vector<double>& lower;
  const std::vector<double>& upper;
  int evaluations = 0;

  void project(std::vector<double>& x) const {
    for (std::size_t k = 0; k < x.size(); ++k) x[k] = std::clamp(x[k], lower[k], upper[k]);
  }

  double eval(std::vector<double>& x) {
    project(x);
    ++evaluations;
    const double f = objective(x);
    return std::isnan(f) ? std::numeric_limits<double>::infinity() : f;
  }
};

struct PassResult {
  std::vector<double> x;
  double f;
  int iterations;
  bool converged;
};

PassResult nelder_mead(Search& s, const std::vector<double>& start, double f_start, const OptimizeOptions& opt) {
  const std::size_t n = start.size();
  std::vector<std::vector<double>> simplex{start};
  std::vector<double> fx{f_start};
  for (std::size_t k = 0; k < n; ++k) {
    std::vector<double> v = start;
    const double range = s.upper[k] - s.lower[k];
    double step = start[k] != 0.0 ? 0.1 * std::abs(start[k]) : 0.1 * std::min(1.0, range);
    step = std::min(step, 0.5 * range);
    if (v[k] + step <= s.upper[k]) {
      v[k] += step;
    } else {
      v[k] -= step;
    }
    fx.push_back(s.eval(v));
    simplex.push_back(std::move(v));
  }

  std::vector<std::size_t> order(n + 1);
  int iterations = 0;
  auto point = [&](const std::vector<double>& centroid, const std::vector<double>& worst, double coef) {
    std::vector<double> p(n);
    for (std::size_t k = 0; k < n; ++k) p[k] = centroid[k] + coef * (worst[k] - centroid[k]);
    return p;
  };

  while (true) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fx[a] < fx[b]; });
    const std::size_t best = order.front(), worst = order.back(), second = order[n - 1];

    double diameter = 0.0, scale = 1.0;
    for (std::size_t k = 0; k < n; ++k) scale = std::max(scale, 1.0 + std::abs(simplex[best][k]));
    for (std::size_t v = 0; v <= n; ++v) {
      for (std::size_t k = 0; k < n; ++k) diameter = std::max(diameter, std::abs(simplex[v][k] - simplex[best][k]));
    }
    const double spread = fx[worst] - fx[best];
    const double ftol = opt.relative_tolerance * (std::abs(fx[best]) + opt.relative_tolerance);
    if (n == 0 || (spread <= ftol && diameter <= opt.parameter_tolerance * scale)) {
      return {simplex[best], fx[best], iterations, true};
    }
    if (s.evaluations >= opt.max_evaluations) return {simplex[best], fx[best], iterations, false};
    ++iterations;

    std::vector<double> centroid(n, 0.0);
    for (std::size_t v = 0; v <= n; ++v) {
      if (v == worst) continue;
      for (std::size_t k = 0; k < n; ++k) centroid[k] += simplex[v][k] / static_cast<double>(n);
    }
    std::vector<double> xr = point(centroid, simplex[worst], -1.0);
    const double fr = s.eval(xr);
    if (fr < fx[best]) {
      std::vector<double> xe = point(centroid, simplex[worst], -2.0);
      const double fe = s.eval(xe);
      if (fe < fr) {
        simplex[worst] = std::move(xe);
        fx[worst] = fe;
      } else {
        simplex[worst] = std::move(xr);
        fx[worst] = fr;
      }
      continue;
    }
    if (fr < fx[second]) {
      simplex[worst] = std::move(xr);
      fx[worst] = fr;
      continue;
    }
    const bool outside = fr < fx[worst];
    std::vector<double> xc = point(centroid, simplex[worst], outside ? -0.5 : 0.5);
    const double fc = s.eval(xc);
    if (fc < (outside ? fr : fx[worst])) {
      simplex[worst] = std::move(xc);
      fx[worst] = fc;
      continue;
    }
    for (std::size_t v = 0; v <= n; ++v) {
      if (v == best) continue;
      for (std::size_t k = 0; k < n; ++k) {
        simplex[v][k] = simplex[best][k] + 0.5 * (simplex[v][k] - simplex[best][k]);
      }
      fx[v] = s.eval(simplex[v]);
    }
  }
}

}  // namespace

FitResult optimize(const Objective& objective, std::vector<double> theta0, const std::vector<double>& lower,
                   const std::vector<double>& upper, const OptimizeOptions& options) {
  const std::size_t n = theta0.size();
  if (lower.size() != n || upper.size() != n) throw ValidationError("optimize: bounds do not match theta0");
  for (std::size_t k = 0; k < n; ++k) {
    if (!std::isfinite(lower[k]) || !std::isfinite(upper[k]) || lower[k] > upper[k]) {
      throw ValidationError("optimize: bounds must be finite with lower <= upper");
    }
  }
  Search s{objective, lower, upper};
  const double f0 = s.eval(theta0);
  if (!std::isfinite(f0)) throw ValidationError("optimize: objective not finite at theta0");

  PassResult pass = nelder_mead(s, theta0, f0, options);
  int iterations = pass.iterations;
  for (int r = 0; r < options.restarts && pass.converged; ++r) {
    PassResult again = nelder_mead(s, pass.x, pass.f, options);
    iterations += again.iterations;
    pass = std::move(again);
  }

  FitResult out;
  out.iterations = iterations;
  out.converged = pass.converged;
  out.scheme = "optimize";
  if (pass.f < f0) {
    out.theta = std::move(pass.x);
    out.objective = pass.f;
  } else {
    out.theta = std::move(theta0);
    out.objective = f0;
  }
  return out;
}

}  // namespace cfmpp
