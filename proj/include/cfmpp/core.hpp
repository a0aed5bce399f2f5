#ifndef CFMPP_CORE_HPP
#define CFMPP_CORE_HPP

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace cfmpp {

/// Raised when an input violates a documented precondition or type invariant.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a numerical routine cannot produce a result (factorization
/// failure, rejection-bound breach, singular system, ...).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Spatial coordinate plus an optional event time.
struct Location {
  std::vector<double> x;
  std::optional<double> t;

  bool operator==(const Location&) const = default;
};

/// Observation window: an axis-aligned box in R^d (d = 1, 2, 3), optionally
/// crossed with a time interval [0, T*]. With the torus flag set, opposite
/// faces of the box are identified.
class Window {
 public:
  Window(std::vector<double> lower, std::vector<double> upper,
         std::optional<double> horizon = std::nullopt, bool torus = false,
         double time_scale = 1.0);

  static Window unit_square(std::optional<double> horizon = std::nullopt, bool torus = false);

  std::size_t dimension() const { return lower_.size(); }
  const std::vector<double>& lower() const { return lower_; }
  const std::vector<double>& upper() const { return upper_; }
  double side(std::size_t axis) const { return upper_[axis] - lower_[axis]; }

  bool temporal() const { return horizon_.has_value(); }
  const std::optional<double>& horizon_opt() const { return horizon_; }
  /// T*; throws ValidationError on a purely spatial window.
  double horizon() const;

  bool torus() const { return torus_; }
  /// Relative weight of time against space in the ground metric.
  double time_scale() const { return time_scale_; }

  double spatial_volume() const;
  /// Spatial volume times T* for spatio-temporal windows.
  double ground_volume() const;

  bool contains_spatial(std::span<const double> x) const;
  bool contains(const Location& g) const;

  /// Minimal-image displacement b - a (plain difference off the torus).
  std::vector<double> displacement(std::span<const double> a, std::span<const double> b) const;
  double spatial_distance(std::span<const double> a, std::span<const double> b) const;
  /// max(|x - y|, beta |s - t|), the supremum metric on the ground space.
  double ground_distance(const Location& a, const Location& b) const;

  /// Wraps a coordinate into [lower, upper) on the torus; identity otherwise.
  std::vector<double> wrap(std::vector<double> x) const;

  bool operator==(const Window&) const = default;

 private:
  std::vector<double> lower_;
  std::vector<double> upper_;
  std::optional<double> horizon_;
  bool torus_ = false;
  double time_scale_ = 1.0;
};

/// Auxiliary mark: a discrete type in {1, ..., k_A} and/or a continuous vector.
/// A default-constructed mark is the single type 1 (unmarked process).
struct AuxMark {
  std::optional<int> type = 1;
  std::vector<double> continuous;

  static AuxMark discrete(int type) { return AuxMark{type, {}}; }
  static AuxMark real(std::vector<double> values) { return AuxMark{std::nullopt, std::move(values)}; }

  void validate() const;
  bool operator==(const AuxMark&) const = default;
};

/// Half-open support [start, end). end may be +infinity.
struct Support {
  double start = 0.0;
  double end = kInfinity;

  bool contains(double t) const { return t >= start && t < end; }
  bool empty() const { return !(end > start); }
  bool operator==(const Support&) const = default;
};

enum class Interpolation { Step, Linear };

/// A grid-sampled cadlag function. Values hold on [t_j, t_{j+1}) in step mode
/// and are interpolated in linear mode; the path is identically zero outside
/// its support. A default-constructed path has no grid and is identically 0.
class CadlagPath {
 public:
  CadlagPath() = default;
  CadlagPath(std::vector<double> grid, std::vector<double> values, Support support,
             Interpolation mode = Interpolation::Step);

  /// Samples `fn` on the grid and zeroes the grid points outside `support`.
  template <typename Fn>
  static CadlagPath sample(std::vector<double> grid, Fn&& fn, Support support,
                           Interpolation mode = Interpolation::Step) {
    std::vector<double> values(grid.size(), 0.0);
    for (std::size_t j = 0; j < grid.size(); ++j) {
      if (support.contains(grid[j])) values[j] = fn(grid[j]);
    }
    return CadlagPath(std::move(grid), std::move(values), support, mode);
  }

  static CadlagPath constant(std::vector<double> grid, double value,
                             Interpolation mode = Interpolation::Step);

  const std::vector<double>& grid() const { return grid_; }
  const std::vector<double>& values() const { return values_; }
  const Support& support() const { return support_; }
  Interpolation mode() const { return mode_; }
  bool empty() const { return grid_.empty(); }
  std::size_t size() const { return grid_.size(); }

  /// Ambient interval [front, back] of the grid.
  double front() const;
  double back() const;

  double operator()(double t) const;

  bool operator==(const CadlagPath&) const = default;

 private:
  std::vector<double> grid_;
  std::vector<double> values_;
  Support support_{0.0, 0.0};
  Interpolation mode_ = Interpolation::Step;
};

/// Uniform grid 0, step, 2 step, ..., horizon. The horizon must be an integer
/// multiple of the step (relative tolerance 1e-9).
std::vector<double> uniform_grid(double horizon, double step);
std::vector<double> uniform_grid_points(double start, double end, std::size_t points);

struct MarkedPoint {
  Location location;
  AuxMark aux;
  CadlagPath mark;

  bool operator==(const MarkedPoint&) const = default;
};

/// Reference measure on the auxiliary marks.
struct AuxReference {
  enum class Kind { Counting, UnitExponential, Uniform, Lebesgue, Product };
  Kind kind = Kind::Counting;
  int types = 1;                 ///< k_A for Counting / Product
  double lower = 0.0;            ///< Uniform support
  double upper = 1.0;

  /// nu_A(A); infinite for Lebesgue.
  double total_mass() const;
  bool operator==(const AuxReference&) const = default;
};

/// Reference law on the functional marks.
struct MarkReference {
  enum class Kind { Wiener, PointMass, User };
  Kind kind = Kind::PointMass;
  std::string id;
  bool operator==(const MarkReference&) const = default;
};

struct ReferenceSpec {
  AuxReference aux;
  MarkReference mark;
  bool operator==(const ReferenceSpec&) const = default;
};

/// Sorted mark-sampling times s_1 < ... < s_k.
class SampleSchedule {
 public:
  explicit SampleSchedule(std::vector<double> times, std::optional<double> horizon = std::nullopt);
  const std::vector<double>& times() const { return times_; }
  std::size_t size() const { return times_.size(); }
  double operator[](std::size_t i) const { return times_[i]; }

 private:
  std::vector<double> times_;
};

/// Finite simple realization of a marked point process in a window.
class Configuration {
 public:
  explicit Configuration(Window window, std::vector<MarkedPoint> points = {},
                         ReferenceSpec reference = {});

  const Window& window() const { return window_; }
  const std::vector<MarkedPoint>& points() const { return points_; }
  const ReferenceSpec& reference() const { return reference_; }
  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }
  const MarkedPoint& operator[](std::size_t i) const { return points_[i]; }

  /// Same window and reference with a different point list (re-validated).
  Configuration with_points(std::vector<MarkedPoint> points) const;
  /// Copy without point i.
  Configuration without(std::size_t i) const;

  bool operator==(const Configuration&) const = default;

 private:
  Window window_;
  std::vector<MarkedPoint> points_;
  ReferenceSpec reference_;
};

/// Plain marked points from ground locations (default aux mark, zero mark).
std::vector<MarkedPoint> unmarked(const std::vector<Location>& ground);

std::vector<Location> ground_projection(const Configuration& c);
/// Event times of a spatio-temporal configuration, in point order.
std::vector<double> temporal_projection(const Configuration& c);

/// Translates every ground location by z (spatial part), wrapping on the torus.
Configuration shift(const Configuration& c, std::span<const double> z);

/// Closed cylinder test: |x - y| <= u and |t - s| <= v. Spatial distance uses
/// the torus metric when a torus window is supplied.
bool cylinder_contains(const Location& center, double u, double v, const Location& query,
                       const Window* window = nullptr);

/// Sup over the merged grid of |f - g|.
double uniform_distance(const CadlagPath& f, const CadlagPath& g);

}  // namespace cfmpp

#endif  // CFMPP_CORE_HPP
