#ifndef CFMPP_GROUND_HPP
#define CFMPP_GROUND_HPP

#include <functional>
#include <optional>
#include <variant>
#include <vector>

#include "cfmpp/core.hpp"
#include "cfmpp/gaussian.hpp"
#include "cfmpp/random.hpp"

namespace cfmpp {

using IntensityFunction = std::function<double(const Location&)>;

struct HomogeneousPoisson {
  double rate = 1.0;
};

/// Simulated by rejection from the dominating constant `bound`.
struct InhomogeneousPoisson {
  IntensityFunction intensity;
  double bound = 1.0;
};

/// Lambda = exp(Z) with Z Gaussian, discretized on `resolution` cells per
/// spatial axis and `time_resolution` cells along time (temporal windows).
struct LogGaussianCox {
  IntensityFunction mean = [](const Location&) { return 0.0; };
  CovarianceKernel kernel;
  int resolution = 16;
  int time_resolution = 1;
};

/// Poisson births of total rate `arrival_rate` on [0, T*], uniform locations,
/// Exp(`death_rate`) lifetimes.
struct ImmigrationDeath {
  double arrival_rate = 1.0;
  double death_rate = 1.0;
};

/// Density proportional to beta^n gamma^{#neighbour pairs} with respect to a
/// unit-rate Poisson process; neighbours lie within the closed cylinder of
/// radius `range` and half-height `time_range` (spatial only when absent).
struct PairwiseGibbs {
  double beta = 1.0;
  double gamma = 1.0;
  double range = 0.0;
  std::optional<double> time_range;

  void validate() const;
  bool neighbours(const Location& a, const Location& b, const Window& w) const;
};

using GroundModel =
    std::variant<HomogeneousPoisson, InhomogeneousPoisson, LogGaussianCox, ImmigrationDeath, PairwiseGibbs>;

/// Piecewise-constant field on a regular grid covering the window (time is the
/// last axis on spatio-temporal windows).
class FieldGrid {
 public:
  FieldGrid(const Window& window, int resolution, int time_resolution);

  std::size_t cell_count() const { return values_.size(); }
  double cell_volume() const { return cell_volume_; }
  bool temporal() const { return temporal_; }
  const std::vector<int>& shape() const { return shape_; }

  /// Flat index of the cell containing g; throws if g lies outside the grid.
  std::size_t cell_of(std::span<const double> x, std::optional<double> t) const;
  Location cell_center(std::size_t index) const;
  /// Lower corner and edge lengths of a cell (time last when temporal).
  std::pair<std::vector<double>, std::vector<double>> cell_box(std::size_t index) const;

  double value(std::size_t index) const { return values_[index]; }
  double at(std::span<const double> x, std::optional<double> t = std::nullopt) const {
    return values_[cell_of(x, t)];
  }
  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }

 private:
  std::vector<double> lower_;
  std::vector<double> edge_;
  std::vector<int> shape_;
  bool temporal_ = false;
  double cell_volume_ = 0.0;
  std::vector<double> values_;
};

struct LgcpRealization {
  FieldGrid intensity;  ///< Lambda per cell
  std::vector<Location> points;
};

struct ImmigrantRecord {
  Location location;  ///< (x, birth time)
  double lifetime = 0.0;
  double death = 0.0;  ///< min(birth + lifetime, T*)
};

/// Uniform location in the ground space (spatio-temporal windows include time).
Location uniform_location(const Window& w, Rng& rng);

std::vector<Location> simulate_poisson(const HomogeneousPoisson& model, const Window& w, RngSeed seed);
std::vector<Location> simulate_poisson(const InhomogeneousPoisson& model, const Window& w, RngSeed seed);
LgcpRealization simulate_lgcp(const LogGaussianCox& model, const Window& w, RngSeed seed);
std::vector<ImmigrantRecord> simulate_immigration_death(const ImmigrationDeath& model, const Window& w,
                                                        RngSeed seed);
/// Birth-death Metropolis-Hastings started from the empty pattern; returns the
/// state after `steps` proposals.
std::vector<Location> simulate_gibbs(const PairwiseGibbs& model, const Window& w, std::size_t steps,
                                     RngSeed seed);

/// Ground locations of any model; `gibbs_steps` is only used by PairwiseGibbs.
std::vector<Location> simulate_ground(const GroundModel& model, const Window& w, RngSeed seed,
                                      std::size_t gibbs_steps = 10000);

using Retention = std::function<double(const MarkedPoint&)>;

/// Independent p-thinning.
Configuration thin(const Configuration& c, const Retention& retention, RngSeed seed);

/// 1{S_k intersects supp(mark)}: keeps exactly the points observable at some
/// sampling time.
Retention observable_retention(const SampleSchedule& schedule);

}  // namespace cfmpp

#endif  // CFMPP_GROUND_HPP
