#include "cfmpp/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace cfmpp {

namespace {

bool finite(double v) { return std::isfinite(v); }

double wrap_coordinate(double v, double lo, double hi) {
  const double length = hi - lo;
  double r = std::fmod(v - lo, length);
  if (r < 0) r += length;
  if (r >= length) r = 0.0;
  return lo + r;
}

}  // namespace

// ---------------------------------------------------------------------------
// Window

Window::Window(std::vector<double> lower, std::vector<double> upper,
               std::optional<double> horizon, bool torus, double time_scale)
    : lower_(std::move(lower)),
      upper_(std::move(upper)),
      horizon_(horizon),
      torus_(torus),
      time_scale_(time_scale) {
  if (lower_.empty() || lower_.size() > 3) {
    throw ValidationError("window: spatial dimension must be 1, 2 or 3");
  }
  if (lower_.size() != upper_.size()) {
    throw ValidationError("window: lower and upper corners differ in dimension");
  }
  for (std::size_t i = 0; i < lower_.size(); ++i) {
    if (!finite(lower_[i]) || !finite(upper_[i]) || !(upper_[i] > lower_[i])) {
      throw ValidationError("window: spatial box must have positive finite volume");
    }
  }
  if (horizon_ && !(finite(*horizon_) && *horizon_ > 0.0)) {
    throw ValidationError("window: time horizon T* must be positive");
  }
  if (!(time_scale_ > 0.0) || !finite(time_scale_)) {
    throw ValidationError("window: time_scale must be positive");
  }
}

Window Window::unit_square(std::optional<double> horizon, bool torus) {
  return Window({0.0, 0.0}, {1.0, 1.0}, horizon, torus);
}

double Window::horizon() const {
  if (!horizon_) throw ValidationError("window has no temporal interval");
  return *horizon_;
}

double Window::spatial_volume() const {
  double v = 1.0;
  for (std::size_t i = 0; i < dimension(); ++i) v *= side(i);
  return v;
}

double Window::ground_volume() const {
  return temporal() ? spatial_volume() * *horizon_ : spatial_volume();
}

bool Window::contains_spatial(std::span<const double> x) const {
  if (x.size() != dimension()) return false;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] >= lower_[i] && x[i] <= upper_[i])) return false;
  }
  return true;
}

bool Window::contains(const Location& g) const {
  if (!contains_spatial(g.x)) return false;
  if (g.t) {
    if (!horizon_) return false;
    return *g.t >= 0.0 && *g.t <= *horizon_;
  }
  return true;
}

std::vector<double> Window::displacement(std::span<const double> a,
                                         std::span<const double> b) const {
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    double v = b[i] - a[i];
    if (torus_) {
      const double length = side(i);
      v -= length * std::round(v / length);
    }
    d[i] = v;
  }
  return d;
}

double Window::spatial_distance(std::span<const double> a, std::span<const double> b) const {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double v = b[i] - a[i];
    if (torus_) {
      const double length = side(i);
      v -= length * std::round(v / length);
    }
    s += v * v;
  }
  return std::sqrt(s);
}

double Window::ground_distance(const Location& a, const Location& b) const {
  double d = spatial_distance(a.x, b.x);
  if (a.t && b.t) d = std::max(d, time_scale_ * std::abs(*a.t - *b.t));
  return d;
}

std::vector<double> Window::wrap(std::vector<double> x) const {
  if (!torus_) return x;
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = wrap_coordinate(x[i], lower_[i], upper_[i]);
  return x;
}

// ---------------------------------------------------------------------------
// Marks and paths

void AuxMark::validate() const {
  if (!type && continuous.empty()) {
    throw ValidationError("aux mark: at least one of type / continuous must be present");
  }
  if (type && *type < 1) throw ValidationError("aux mark: discrete type must be >= 1");
  for (double v : continuous) {
    if (!finite(v)) throw ValidationError("aux mark: continuous components must be finite");
  }
}

CadlagPath::CadlagPath(std::vector<double> grid, std::vector<double> values, Support support,
                       Interpolation mode)
    : grid_(std::move(grid)), values_(std::move(values)), support_(support), mode_(mode) {
  if (grid_.size() != values_.size()) {
    throw ValidationError("path: grid and values differ in length");
  }
  if (std::isnan(support_.start) || std::isnan(support_.end) || !finite(support_.start) ||
      support_.end < support_.start) {
    throw ValidationError("path: support must be an interval [a, b) with a <= b");
  }
  for (std::size_t j = 0; j < grid_.size(); ++j) {
    if (!finite(grid_[j])) throw ValidationError("path: grid times must be finite");
    if (j > 0 && !(grid_[j] > grid_[j - 1])) {
      throw ValidationError("path: grid must be strictly increasing");
    }
    if (!finite(values_[j])) throw ValidationError("path: values must be finite");
    if (!support_.contains(grid_[j]) && values_[j] != 0.0) {
      throw ValidationError("path: non-zero value at grid time " + std::to_string(grid_[j]) +
                            " outside the support");
    }
  }
}

CadlagPath CadlagPath::constant(std::vector<double> grid, double value, Interpolation mode) {
  if (grid.empty()) throw ValidationError("path: constant path needs a grid");
  const Support full{grid.front(), kInfinity};
  std::vector<double> values(grid.size(), value);
  return CadlagPath(std::move(grid), std::move(values), full, mode);
}

double CadlagPath::front() const {
  if (grid_.empty()) throw ValidationError("path: empty grid has no ambient interval");
  return grid_.front();
}

double CadlagPath::back() const {
  if (grid_.empty()) throw ValidationError("path: empty grid has no ambient interval");
  return grid_.back();
}

double CadlagPath::operator()(double t) const {
  if (grid_.empty() || !support_.contains(t) || t < grid_.front()) return 0.0;
  const auto it = std::upper_bound(grid_.begin(), grid_.end(), t);
  const auto j = static_cast<std::size_t>(it - grid_.begin()) - 1;
  if (mode_ == Interpolation::Step || j + 1 == grid_.size()) return values_[j];
  const double w = (t - grid_[j]) / (grid_[j + 1] - grid_[j]);
  return values_[j] + w * (values_[j + 1] - values_[j]);
}

std::vector<double> uniform_grid(double horizon, double step) {
  if (!(step > 0.0) || !(horizon > 0.0)) {
    throw ValidationError("grid: horizon and step must be positive");
  }
  const double ratio = horizon / step;
  const double n = std::round(ratio);
  if (std::abs(ratio - n) > 1e-9 * std::max(1.0, ratio)) {
    throw ValidationError("grid: step must divide the horizon");
  }
  const auto count = static_cast<std::size_t>(n);
  std::vector<double> grid(count + 1);
  for (std::size_t k = 0; k <= count; ++k) grid[k] = horizon * static_cast<double>(k) / n;
  return grid;
}

std::vector<double> uniform_grid_points(double start, double end, std::size_t points) {
  if (points < 2 || !(end > start)) throw ValidationError("grid: need >= 2 points on [start, end]");
  std::vector<double> grid(points);
  const double n = static_cast<double>(points - 1);
  for (std::size_t k = 0; k < points; ++k) {
    grid[k] = start + (end - start) * static_cast<double>(k) / n;
  }
  grid.back() = end;
  return grid;
}

// ---------------------------------------------------------------------------
// Reference measures and schedules

double AuxReference::total_mass() const {
  switch (kind) {
    case Kind::Counting:
    case Kind::Product:
      return static_cast<double>(types);
    case Kind::UnitExponential:
    case Kind::Uniform:
      return 1.0;
    case Kind::Lebesgue:
      return kInfinity;
  }
  return kInfinity;
}

SampleSchedule::SampleSchedule(std::vector<double> times, std::optional<double> horizon)
    : times_(std::move(times)) {
  if (times_.empty()) throw ValidationError("schedule: needs at least one sampling time");
  for (std::size_t i = 0; i < times_.size(); ++i) {
    if (!finite(times_[i]) || times_[i] < 0.0) {
      throw ValidationError("schedule: times must be finite and >= 0");
    }
    if (horizon && times_[i] > *horizon) {
      throw ValidationError("schedule: time " + std::to_string(times_[i]) + " beyond T*");
    }
    if (i > 0 && !(times_[i] > times_[i - 1])) {
      throw ValidationError("schedule: times must be strictly increasing");
    }
  }
}

// ---------------------------------------------------------------------------
// Configuration

namespace {

void check_simple(const std::vector<MarkedPoint>& points) {
  std::vector<std::size_t> order(points.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto key_less = [&](std::size_t a, std::size_t b) {
    const Location& la = points[a].location;
    const Location& lb = points[b].location;
    if (la.x != lb.x) return la.x < lb.x;
    return la.t < lb.t;
  };
  std::sort(order.begin(), order.end(), key_less);
  for (std::size_t k = 1; k < order.size(); ++k) {
    if (points[order[k]].location == points[order[k - 1]].location) {
      throw ValidationError("configuration: duplicate ground location (process must be simple)");
    }
  }
}

}  // namespace

Configuration::Configuration(Window window, std::vector<MarkedPoint> points,
                             ReferenceSpec reference)
    : window_(std::move(window)), points_(std::move(points)), reference_(std::move(reference)) {
  for (const auto& p : points_) {
    if (p.location.x.size() != window_.dimension()) {
      throw ValidationError("configuration: point dimension does not match the window");
    }
    if (!window_.contains(p.location)) {
      throw ValidationError("configuration: point outside the window");
    }
    if (window_.temporal() && !p.mark.empty() && p.mark.support().start < 0.0) {
      throw ValidationError("configuration: mark support starts before time 0");
    }
    p.aux.validate();
    if (p.aux.type && (reference_.aux.kind == AuxReference::Kind::Counting ||
                       reference_.aux.kind == AuxReference::Kind::Product)) {
      if (*p.aux.type > reference_.aux.types) {
        throw ValidationError("configuration: aux type exceeds k_A");
      }
    }
  }
  check_simple(points_);
}

Configuration Configuration::with_points(std::vector<MarkedPoint> points) const {
  return Configuration(window_, std::move(points), reference_);
}

Configuration Configuration::without(std::size_t i) const {
  std::vector<MarkedPoint> rest;
  rest.reserve(points_.size());
  for (std::size_t k = 0; k < points_.size(); ++k) {
    if (k != i) rest.push_back(points_[k]);
  }
  return with_points(std::move(rest));
}

std::vector<MarkedPoint> unmarked(const std::vector<Location>& ground) {
  std::vector<MarkedPoint> out;
  out.reserve(ground.size());
  for (const auto& g : ground) out.push_back(MarkedPoint{g, AuxMark{}, CadlagPath{}});
  return out;
}

std::vector<Location> ground_projection(const Configuration& c) {
  std::vector<Location> out;
  out.reserve(c.size());
  for (const auto& p : c.points()) out.push_back(p.location);
  return out;
}

std::vector<double> temporal_projection(const Configuration& c) {
  std::vector<double> out;
  out.reserve(c.size());
  for (const auto& p : c.points()) {
    if (!p.location.t) throw ValidationError("temporal projection of a point without time");
    out.push_back(*p.location.t);
  }
  return out;
}

Configuration shift(const Configuration& c, std::span<const double> z) {
  const Window& w = c.window();
  if (z.size() != w.dimension()) throw ValidationError("shift: vector dimension mismatch");
  std::vector<MarkedPoint> moved = c.points();
  for (auto& p : moved) {
    for (std::size_t i = 0; i < z.size(); ++i) p.location.x[i] += z[i];
    p.location.x = w.wrap(std::move(p.location.x));
    if (!w.contains_spatial(p.location.x)) {
      throw ValidationError("shift: point leaves the (non-torus) window");
    }
  }
  return c.with_points(std::move(moved));
}

bool cylinder_contains(const Location& center, double u, double v, const Location& query,
                       const Window* window) {
  if (u < 0.0 || v < 0.0) throw ValidationError("cylinder: radii must be non-negative");
  if (center.x.size() != query.x.size()) throw ValidationError("cylinder: dimension mismatch");
  double dist = 0.0;
  if (window) {
    dist = window->spatial_distance(center.x, query.x);
  } else {
    for (std::size_t i = 0; i < center.x.size(); ++i) {
      const double d = center.x[i] - query.x[i];
      dist += d * d;
    }
    dist = std::sqrt(dist);
  }
  if (dist > u) return false;
  if (center.t && query.t) return std::abs(*center.t - *query.t) <= v;
  return true;
}

double uniform_distance(const CadlagPath& f, const CadlagPath& g) {
  if (f.empty() || g.empty()) throw ValidationError("uniform distance: empty path");
  if (f.front() != g.front() || f.back() != g.back()) {
    throw ValidationError("uniform distance: paths live on different ambient intervals");
  }
  std::vector<double> merged;
  merged.reserve(f.size() + g.size());
  std::merge(f.grid().begin(), f.grid().end(), g.grid().begin(), g.grid().end(),
             std::back_inserter(merged));
  merged.erase(std::unique(merged.begin(), merged.end()), merged.end());
  double sup = 0.0;
  for (double t : merged) sup = std::max(sup, std::abs(f(t) - g(t)));
  return sup;
}

}  // namespace cfmpp
