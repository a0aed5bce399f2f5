#ifndef CFMPP_SKOROHOD_HPP
#define CFMPP_SKOROHOD_HPP

#include <vector>

#include "cfmpp/core.hpp"

namespace cfmpp {

/// Strictly increasing piecewise-linear time change through the given knots.
/// The first and last knots pin the endpoints of the ambient interval.
class Warp {
 public:
  Warp(std::vector<double> from, std::vector<double> to);
  static Warp identity(double start, double end);

  const std::vector<double>& from() const { return from_; }
  const std::vector<double>& to() const { return to_; }

  double operator()(double t) const;
  double inverse(double s) const;
  Warp inverted() const { return Warp(to_, from_); }

  /// max over segments of |log slope|.
  double log_slope_bound() const;

 private:
  std::vector<double> from_;
  std::vector<double> to_;
};

/// The warp-dependent integral
///   int e^{-u} sup_t min(|f(t ^ u) - g(warp(t) ^ u)|, 1) du
/// over the ambient interval. The supremum is taken over the breakpoints of
/// the integrand; the outer integral treats the supremum as piecewise
/// constant (step paths) or piecewise linear (linear paths) between
/// breakpoints.
double warped_mismatch_integral(const CadlagPath& f, const CadlagPath& g, const Warp& warp);

/// max(gamma(warp), warped_mismatch_integral(f, g, warp)).
double warp_cost(const CadlagPath& f, const CadlagPath& g, const Warp& warp);

struct SkorohodMatch {
  double distance = 0.0;
  Warp warp = Warp::identity(0.0, 1.0);  ///< maps f's time axis onto g's
};

/// Skorohod distance approximated from above over piecewise-linear warps with
/// knots on an n x n lattice of the ambient interval.
///
/// Candidate warps come from a dynamic program that minimizes a decomposable
/// lower bound of the warp cost (the log-slope bound together with the
/// lattice-point mismatches weighted by e^{-max(t, warp(t))} - e^{-T*}). The
/// returned value is the exact warp cost minimized over the candidates, the
/// identity warp, and (for odd lattices) the candidates of the half-resolution
/// lattice, so nested refinement never increases the result.
SkorohodMatch skorohod_match(const CadlagPath& f, const CadlagPath& g, int warp_grid_resolution);

double skorohod_distance(const CadlagPath& f, const CadlagPath& g, int warp_grid_resolution);

}  // namespace cfmpp

#endif  // CFMPP_SKOROHOD_HPP
