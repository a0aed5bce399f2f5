#ifndef CFMPP_STATS_HPP
#define CFMPP_STATS_HPP

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cfmpp/core.hpp"
#include "cfmpp/random.hpp"

namespace cfmpp {

/// Piecewise-constant intensity surface on a regular grid over the window
/// (time is the last axis when time bins are used).
struct IntensitySurface {
  std::vector<double> lower;
  std::vector<double> cell;   ///< edge length per axis
  std::vector<int> shape;
  std::vector<double> values; ///< row-major, last axis fastest
  std::optional<double> bandwidth;

  double cell_volume() const;
  /// sum of values times cell volume
  double integral() const;
  std::vector<double> cell_center(std::size_t index) const;
};

/// Box counts divided by cell volume. With time_bins > 0 on a spatio-temporal
/// window, time is binned as an extra axis.
IntensitySurface intensity_box(const Configuration& c, int cells_per_axis, int time_bins = 0);

/// Gaussian kernel estimate at the centres of a resolution^d raster, with the
/// usual edge correction (kernel mass inside the box) off the torus.
IntensitySurface intensity_kernel(const Configuration& c, double bandwidth, int resolution = 32);

struct PcfEstimate {
  std::vector<double> lags;
  std::vector<double> values;
  double bandwidth = 0.0;
  std::string edge_correction;  ///< "translation" or "torus"
};

/// Epanechnikov-kernel pair correlation of the spatial ground pattern with
/// translation edge correction (exact set covariance |W| on a torus).
/// Default bandwidth 0.15 / sqrt(lambda_hat).
PcfEstimate pcf_ground(const Configuration& c, const std::vector<double>& lags,
                       std::optional<double> bandwidth = std::nullopt);

/// Maps (M(s_1), ..., M(s_k)) to a class id in 0..classes-1.
using MarkClassifier = std::function<int(const std::vector<double>&)>;

/// Class-pair pair correlation estimates (a, b) for the S_k-sampled marks.
/// With a single class this coincides with pcf_ground.
std::map<std::pair<int, int>, PcfEstimate> pcf_mark_sampled(const Configuration& c, const SampleSchedule& schedule,
                                                            const MarkClassifier& classify, int classes,
                                                            const std::vector<double>& lags,
                                                            std::optional<double> bandwidth = std::nullopt);

struct FunctionalDatum {
  std::vector<double> x;
  CadlagPath curve;
};

struct VariogramEstimate {
  std::vector<double> edges;   ///< bin boundaries, size bins + 1
  std::vector<double> centers; ///< mean pair distance per bin (bin midpoint when empty)
  std::vector<double> gamma;
  std::vector<std::size_t> counts;
};

/// Half the squared L2 distance of two curves over their shared grid (trapezoid rule).
double half_squared_distance(const CadlagPath& a, const CadlagPath& b);

/// Binned trace-variogram. Default bin width: window (or data) diameter / 15.
VariogramEstimate trace_variogram(const std::vector<FunctionalDatum>& curves,
                                  std::optional<double> bin_width = std::nullopt, const Window* window = nullptr);

struct VariogramModel {
  enum class Family { Spherical, Exponential };
  Family family = Family::Exponential;
  double nugget = 0.0;
  double partial_sill = 1.0;
  double range = 1.0;

  /// gamma(0) = 0; nugget + partial sill shape for h > 0.
  double operator()(double h) const;
};

/// Weighted least squares (weights = pair counts) over non-empty bins.
VariogramModel fit_variogram(const VariogramEstimate& estimate, VariogramModel::Family family);

struct KrigingResult {
  CadlagPath prediction;
  std::vector<double> weights;
};

/// Ordinary kriging with time-constant weights from the trace-variogram system.
KrigingResult kriging_predict(const std::vector<FunctionalDatum>& curves, const std::vector<double>& x0,
                              const VariogramModel& model, const Window* window = nullptr);

struct IdentityCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  double lhs_se = 0.0;
  double rhs_se = 0.0;
  double residual = 0.0;
  double residual_se = 0.0;
  bool pass = true;  ///< |residual| <= 3 residual_se
};

using Simulator = std::function<Configuration(RngSeed)>;

/// Monte Carlo mean of sum_i h(y_i) against the integral of the supplied
/// first-moment integrand (h times the intensity functional, marks integrated
/// out) over the window by midpoint quadrature.
IdentityCheck campbell_check(const Simulator& simulate, const std::function<double(const MarkedPoint&)>& h,
                             const std::function<double(const Location&)>& rhs_integrand, const Window& window,
                             int replicates, RngSeed seed, int resolution = 64);

/// Georgii-Nguyen-Zessin residual
///   E[sum_i h(y_i, Psi \ y_i)] - E[int h(y, Psi) lambda(y; Psi) dy]
/// with the inner integral by midpoint quadrature over the ground space.
/// `lift` turns a quadrature location into a candidate point (unmarked by default).
IdentityCheck gnz_check(const Simulator& simulate,
                        const std::function<double(const MarkedPoint&, const Configuration&)>& papangelou,
                        const std::function<double(const MarkedPoint&, const Configuration&)>& h,
                        const Window& window, int replicates, RngSeed seed, int resolution = 32,
                        const std::function<MarkedPoint(const Location&)>& lift = {});

/// Midpoint nodes of a resolution^d (x resolution in time) tensor grid over
/// the ground space, with the common cell volume.
std::pair<std::vector<Location>, double> midpoint_nodes(const Window& w, int resolution);

}  // namespace cfmpp

#endif  // CFMPP_STATS_HPP
