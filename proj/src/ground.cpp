#include "cfmpp/ground.hpp"

#include <algorithm>
#include <cmath>

namespace cfmpp {

namespace {

std::size_t poisson_count(double mean, Rng& rng) {
  if (!(mean >= 0.0) || !std::isfinite(mean)) throw ValidationError("poisson: mean must be finite and >= 0");
  if (mean == 0.0) return 0;
  std::poisson_distribution<std::size_t> dist(mean);
  return dist(rng);
}

}  // namespace

void PairwiseGibbs::validate() const {
  if (!(beta > 0.0) || !std::isfinite(beta)) throw ValidationError("gibbs: beta must be positive");
  if (!(gamma >= 0.0)) throw ValidationError("gibbs: gamma must be >= 0");
  if (gamma > 1.0) throw ValidationError("gibbs: gamma > 1 is not supported (inhibitory models only)");
  if (!(range >= 0.0)) throw ValidationError("gibbs: range must be >= 0");
  if (time_range && !(*time_range >= 0.0)) throw ValidationError("gibbs: time_range must be >= 0");
}

bool PairwiseGibbs::neighbours(const Location& a, const Location& b, const Window& w) const {
  if (w.spatial_distance(a.x, b.x) > range) return false;
  if (time_range && a.t && b.t) return std::abs(*a.t - *b.t) <= *time_range;
  return true;
}

FieldGrid::FieldGrid(const Window& window, int resolution, int time_resolution)
    : lower_(window.lower()), temporal_(window.temporal()) {
  if (resolution < 1 || time_resolution < 1) throw ValidationError("field grid: resolution must be >= 1");
  cell_volume_ = 1.0;
  for (std::size_t k = 0; k < window.dimension(); ++k) {
    shape_.push_back(resolution);
    edge_.push_back(window.side(k) / resolution);
    cell_volume_ *= edge_.back();
  }
  if (temporal_) {
    lower_.push_back(0.0);
    shape_.push_back(time_resolution);
    edge_.push_back(window.horizon() / time_resolution);
    cell_volume_ *= edge_.back();
  }
  std::size_t count = 1;
  for (int s : shape_) count *= static_cast<std::size_t>(s);
  values_.assign(count, 0.0);
}

std::size_t FieldGrid::cell_of(std::span<const double> x, std::optional<double> t) const {
  const std::size_t d = temporal_ ? shape_.size() - 1 : shape_.size();
  if (x.size() != d) throw ValidationError("field grid: dimension mismatch");
  if (temporal_ && !t) throw ValidationError("field grid: time coordinate required");
  std::size_t index = 0;
  for (std::size_t k = 0; k < shape_.size(); ++k) {
    const double v = k < d ? x[k] : *t;
    const double rel = (v - lower_[k]) / edge_[k];
    if (!(rel >= -1e-12) || rel > shape_[k] * (1.0 + 1e-12)) {
      throw ValidationError("field grid: location outside the grid");
    }
    const int cell = std::clamp(static_cast<int>(std::floor(rel)), 0, shape_[k] - 1);
    index = index * static_cast<std::size_t>(shape_[k]) + static_cast<std::size_t>(cell);
  }
  return index;
}

std::pair<std::vector<double>, std::vector<double>> FieldGrid::cell_box(std::size_t index) const {
  std::vector<double> corner(shape_.size());
  for (std::size_t k = shape_.size(); k-- > 0;) {
    const auto n = static_cast<std::size_t>(shape_[k]);
    corner[k] = lower_[k] + static_cast<double>(index % n) * edge_[k];
    index /= n;
  }
  return {corner, edge_};
}

Location FieldGrid::cell_center(std::size_t index) const {
  auto [corner, edge] = cell_box(index);
  Location g;
  const std::size_t d = temporal_ ? shape_.size() - 1 : shape_.size();
  for (std::size_t k = 0; k < d; ++k) g.x.push_back(corner[k] + 0.5 * edge[k]);
  if (temporal_) g.t = corner[d] + 0.5 * edge[d];
  return g;
}

Location uniform_location(const Window& w, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Location g;
  g.x.resize(w.dimension());
  for (std::size_t k = 0; k < w.dimension(); ++k) g.x[k] = w.lower()[k] + unit(rng) * w.side(k);
  if (w.temporal()) g.t = unit(rng) * w.horizon();
  return g;
}

std::vector<Location> simulate_poisson(const HomogeneousPoisson& model, const Window& w, RngSeed seed) {
  if (!(model.rate >= 0.0) || !std::isfinite(model.rate)) {
    throw ValidationError("poisson: rate must be finite and >= 0");
  }
  Rng rng = make_rng(seed);
  const std::size_t n = poisson_count(model.rate * w.ground_volume(), rng);
  std::vector<Location> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(uniform_location(w, rng));
  return out;
}

std::vector<Location> simulate_poisson(const InhomogeneousPoisson& model, const Window& w, RngSeed seed) {
  if (!model.intensity) throw ValidationError("poisson: intensity function missing");
  if (!(model.bound >= 0.0) || !std::isfinite(model.bound)) {
    throw ValidationError("poisson: bound must be finite and >= 0");
  }
  Rng rng = make_rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const std::size_t n = poisson_count(model.bound * w.ground_volume(), rng);
  std::vector<Location> out;
  for (std::size_t i = 0; i < n; ++i) {
    Location g = uniform_location(w, rng);
    const double lambda = model.intensity(g);
    if (!(lambda >= 0.0)) throw NumericalError("poisson: negative or undefined intensity");
    if (lambda > model.bound * (1.0 + 1e-12)) {
      throw NumericalError("poisson: intensity exceeds the rejection bound");
    }
    if (unit(rng) * model.bound < lambda) out.push_back(std::move(g));
  }
  return out;
}

LgcpRealization simulate_lgcp(const LogGaussianCox& model, const Window& w, RngSeed seed) {
  model.kernel.validate();
  if (!model.mean) throw ValidationError("lgcp: mean function missing");
  FieldGrid field(w, model.resolution, model.time_resolution);
  std::vector<Location> centres;
  std::vector<double> mean;
  centres.reserve(field.cell_count());
  for (std::size_t c = 0; c < field.cell_count(); ++c) {
    centres.push_back(field.cell_center(c));
    mean.push_back(model.mean(centres.back()));
  }
  Rng rng = make_rng(seed);
  GaussianSampler sampler(covariance_matrix(model.kernel, centres, &w), mean);
  const std::vector<double> z = sampler.draw(rng);
  for (std::size_t c = 0; c < z.size(); ++c) field.values()[c] = std::exp(z[c]);

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Location> points;
  const std::size_t d = w.dimension();
  for (std::size_t c = 0; c < field.cell_count(); ++c) {
    const std::size_t n = poisson_count(field.value(c) * field.cell_volume(), rng);
    if (n == 0) continue;
    const auto [corner, edge] = field.cell_box(c);
    for (std::size_t i = 0; i < n; ++i) {
      Location g;
      g.x.resize(d);
      for (std::size_t k = 0; k < d; ++k) g.x[k] = corner[k] + unit(rng) * edge[k];
      if (w.temporal()) g.t = corner[d] + unit(rng) * edge[d];
      points.push_back(std::move(g));
    }
  }
  return LgcpRealization{std::move(field), std::move(points)};
}

std::vector<ImmigrantRecord> simulate_immigration_death(const ImmigrationDeath& model, const Window& w,
                                                        RngSeed seed) {
  if (!w.temporal()) throw ValidationError("immigration-death: window has no time interval");
  if (!(model.arrival_rate > 0.0) || !(model.death_rate > 0.0)) {
    throw ValidationError("immigration-death: rates must be positive");
  }
  const double horizon = w.horizon();
  Rng rng = make_rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::exponential_distribution<double> life(model.death_rate);
  const std::size_t n = poisson_count(model.arrival_rate * horizon, rng);
  std::vector<ImmigrantRecord> out(n);
  for (auto& r : out) {
    r.location.x.resize(w.dimension());
    for (std::size_t k = 0; k < w.dimension(); ++k) r.location.x[k] = w.lower()[k] + unit(rng) * w.side(k);
    r.location.t = unit(rng) * horizon;
    r.lifetime = life(rng);
    r.death = std::min(*r.location.t + r.lifetime, horizon);
  }
  std::sort(out.begin(), out.end(),
            [](const ImmigrantRecord& a, const ImmigrantRecord& b) { return *a.location.t < *b.location.t; });
  return out;
}

std::vector<Location> simulate_gibbs(const PairwiseGibbs& model, const Window& w, std::size_t steps,
                                     RngSeed seed) {
  model.validate();
  if (steps < 1) throw ValidationError("gibbs: steps must be >= 1");
  Rng rng = make_rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double scale = model.beta * w.ground_volume();
  std::vector<Location> state;

  auto neighbour_count = [&](const Location& g, std::size_t skip) {
    int count = 0;
    for (std::size_t j = 0; j < state.size(); ++j) {
      if (j != skip && model.neighbours(g, state[j], w)) ++count;
    }
    return count;
  };

  for (std::size_t step = 0; step < steps; ++step) {
    const std::size_t n = state.size();
    if (unit(rng) < 0.5) {
      Location g = uniform_location(w, rng);
      const double ratio = scale * std::pow(model.gamma, neighbour_count(g, n)) / static_cast<double>(n + 1);
      if (unit(rng) < ratio) state.push_back(std::move(g));
    } else if (n > 0) {
      const auto i = std::min(n - 1, static_cast<std::size_t>(unit(rng) * static_cast<double>(n)));
      const double ratio =
          static_cast<double>(n) / (scale * std::pow(model.gamma, neighbour_count(state[i], i)));
      if (unit(rng) < ratio) {
        state[i] = std::move(state.back());
        state.pop_back();
      }
    }
  }
  return state;
}

std::vector<Location> simulate_ground(const GroundModel& model, const Window& w, RngSeed seed,
                                      std::size_t gibbs_steps) {
  return std::visit(
      [&](const auto& m) -> std::vector<Location> {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, LogGaussianCox>) {
          return simulate_lgcp(m, w, seed).points;
        } else if constexpr (std::is_same_v<M, ImmigrationDeath>) {
          std::vector<Location> out;
          for (auto& r : simulate_immigration_death(m, w, seed)) out.push_back(std::move(r.location));
          return out;
        } else if constexpr (std::is_same_v<M, PairwiseGibbs>) {
          return simulate_gibbs(m, w, gibbs_steps, seed);
        } else {
          return simulate_poisson(m, w, seed);
        }
      },
      model);
}

Configuration thin(const Configuration& c, const Retention& retention, RngSeed seed) {
  if (!retention) throw ValidationError("thin: retention function missing");
  Rng rng = make_rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<MarkedPoint> kept;
  for (const auto& p : c.points()) {
    const double prob = retention(p);
    if (!(prob >= 0.0 && prob <= 1.0)) throw ValidationError("thin: retention probability outside [0, 1]");
    if (unit(rng) < prob) kept.push_back(p);
  }
  return c.with_points(std::move(kept));
}

Retention observable_retention(const SampleSchedule& schedule) {
  return [times = schedule.times()](const MarkedPoint& p) {
    for (double s : times) {
      if (p.mark.support().contains(s)) return 1.0;
    }
    return 0.0;
  };
}

}  // namespace cfmpp
