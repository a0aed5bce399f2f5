#include "cfmpp/infer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "cfmpp/stats.hpp"

namespace cfmpp {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_mark_aux(const ParametricModel& model, const SampledPoint& y, const SampleSchedule& schedule) {
  double f = aux_density_eval(model.aux, y.location, y.aux);
  if (!model.marks.degenerate) f *= fidi_density_eval(model.marks, schedule, y.u).value;
  return std::log(f);
}

bool is_poisson(const GroundSpec& g) { return !std::holds_alternative<PairwiseGibbs>(g); }

const TemporalPoisson& temporal_ground(const ParametricModel& model, const Window& w) {
  const auto* tp = std::get_if<TemporalPoisson>(&model.ground);
  if (!tp) throw ValidationError("model is not temporally grounded");
  if (!w.temporal()) throw ValidationError("temporally grounded model needs a temporal window");
  return *tp;
}

int neighbour_count(const PairwiseGibbs& g, const Location& y, const std::vector<SampledPoint>& phi,
                    const Window& w, const Location* skip) {
  int n = 0;
  for (const auto& p : phi) {
    if (skip && p.location == *skip) continue;
    if (g.neighbours(y, p.location, w)) ++n;
  }
  return n;
}

/// Neighbour counts of the data points (within the data) and of the
/// quadrature nodes; these depend only on the interaction ranges.
struct GibbsCounts {
  std::vector<int> data;
  std::vector<int> nodes;
  double volume = 0.0;
};

GibbsCounts gibbs_counts(const PairwiseGibbs& g, const std::vector<SampledPoint>& data, const Window& w,
                         int resolution) {
  GibbsCounts c;
  for (const auto& y : data) c.data.push_back(neighbour_count(g, y.location, data, w, &y.location));
  const auto [nodes, volume] = midpoint_nodes(w, resolution);
  c.volume = volume;
  c.nodes.reserve(nodes.size());
  for (const auto& x : nodes) c.nodes.push_back(neighbour_count(g, x, data, w, nullptr));
  return c;
}

double gibbs_pseudolikelihood(const ParametricModel& model, const PairwiseGibbs& g,
                              const std::vector<SampledPoint>& data, const GibbsCounts& counts,
                              const SampleSchedule& schedule) {
  double sum = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (counts.data[i] > 0 && g.gamma == 0.0) throw NumericalError("pseudolikelihood: zero Papangelou at a data point");
    sum += std::log(g.beta) + (counts.data[i] > 0 ? counts.data[i] * std::log(g.gamma) : 0.0) +
           log_mark_aux(model, data[i], schedule);
  }
  // gamma^k for small integer k, tabulated.
  std::vector<double> powers;
  double integral = 0.0;
  for (int k : counts.nodes) {
    while (static_cast<int>(powers.size()) <= k) powers.push_back(std::pow(g.gamma, static_cast<double>(powers.size())));
    integral += powers[static_cast<std::size_t>(k)];
  }
  return sum - g.beta * counts.volume * integral;
}

double poisson_pseudolikelihood(const ParametricModel& model, const std::vector<SampledPoint>& data,
                                const Window& w, const SampleSchedule& schedule, int resolution) {
  double sum = 0.0;
  for (const auto& y : data) {
    const double lambda = intensity_functional(model, y, schedule, w);
    if (!(lambda > 0.0)) throw NumericalError("zero intensity at a data point");
    sum += std::log(lambda);
  }
  return sum - ground_mass(model.ground, w, resolution);
}

FitResult minimize_negative(const std::function<double(std::span<const double>)>& value, const ParameterMap& map,
                            std::vector<double> theta0, const OptimizeOptions& options, const std::string& scheme) {
  map.validate();
  auto objective = [&](std::span<const double> th) {
    try {
      const double v = value(th);
      return std::isfinite(v) ? -v : std::numeric_limits<double>::infinity();
    } catch (const NumericalError&) {
      return std::numeric_limits<double>::infinity();
    }
  };
  FitResult r = optimize(objective, std::move(theta0), map.lower, map.upper, options);
  r.scheme = scheme;
  return r;
}

}  // namespace

double TemporalRate::operator()(double t) const {
  switch (family) {
    case Family::Constant: return a;
    case Family::LogLinear: return std::exp(a + b * t);
  }
  return 0.0;
}

double SpatialDensity::operator()(std::span<const double> x, const Window& w) const {
  if (!w.contains_spatial(x)) return 0.0;
  if (family == Family::Uniform) return 1.0 / w.spatial_volume();
  if (coef.size() != w.dimension()) throw ValidationError("spatial density: one coefficient per axis required");
  double f = 1.0;
  for (std::size_t k = 0; k < coef.size(); ++k) {
    const double len = w.side(k);
    const double cl = coef[k] * len;
    if (std::abs(cl) < 1e-12) {
      f /= len;
    } else {
      f *= coef[k] * std::exp(coef[k] * (x[k] - w.lower()[k])) / std::expm1(cl);
    }
  }
  return f;
}

void ParameterMap::validate() const {
  if (!build) throw ValidationError("parameter map: builder missing");
  if (lower.size() != upper.size() || (!names.empty() && names.size() != lower.size())) {
    throw ValidationError("parameter map: names and bounds disagree");
  }
  for (std::size_t k = 0; k < lower.size(); ++k) {
    if (!std::isfinite(lower[k]) || !std::isfinite(upper[k]) || lower[k] > upper[k]) {
      throw ValidationError("parameter map: bounds must be finite with lower <= upper");
    }
  }
}

std::vector<SampledPoint> sampled_points(const Configuration& c, const SampleSchedule& schedule) {
  std::vector<SampledPoint> out;
  out.reserve(c.size());
  for (const auto& p : c.points()) out.push_back({p.location, p.aux, sample_at(p.mark, schedule)});
  return out;
}

double ground_intensity(const GroundSpec& ground, const Location& g, const Window& w) {
  return std::visit(
      [&](const auto& m) -> double {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, HomogeneousPoisson>) {
          return m.rate;
        } else if constexpr (std::is_same_v<M, InhomogeneousPoisson>) {
          if (!m.intensity) throw ValidationError("inhomogeneous Poisson: intensity function missing");
          return m.intensity(g);
        } else if constexpr (std::is_same_v<M, TemporalPoisson>) {
          if (!g.t) throw ValidationError("temporal Poisson: point without time");
          return m.spatial(g.x, w) * m.rate(*g.t);
        } else {
          throw ValidationError("Gibbs models have no closed-form intensity");
        }
      },
      ground);
}

double ground_mass(const GroundSpec& ground, const Window& w, int resolution) {
  if (const auto* h = std::get_if<HomogeneousPoisson>(&ground)) return h->rate * w.ground_volume();
  if (std::holds_alternative<PairwiseGibbs>(ground)) throw ValidationError("Gibbs models have no closed-form mass");
  if (const auto* tp = std::get_if<TemporalPoisson>(&ground)) {
    if (!w.temporal()) throw ValidationError("temporal Poisson needs a temporal window");
    if (resolution < 1) throw ValidationError("quadrature: resolution must be positive");
    const double dt = w.horizon() / resolution;
    double time = 0.0;
    for (int j = 0; j < resolution; ++j) time += tp->rate((j + 0.5) * dt);
    time *= dt;
    double space = 1.0;
    if (tp->spatial.family != SpatialDensity::Family::Uniform) {
      const Window spatial(w.lower(), w.upper(), std::nullopt, w.torus());
      const auto [nodes, volume] = midpoint_nodes(spatial, resolution);
      space = 0.0;
      for (const auto& g : nodes) space += tp->spatial(g.x, w);
      space *= volume;
    }
    return time * space;
  }
  const auto [nodes, volume] = midpoint_nodes(w, resolution);
  double s = 0.0;
  for (const auto& g : nodes) s += ground_intensity(ground, g, w);
  return s * volume;
}

double intensity_functional(const ParametricModel& model, const SampledPoint& y, const SampleSchedule& schedule,
                            const Window& w) {
  const double lambda = ground_intensity(model.ground, y.location, w);
  if (lambda == 0.0) return 0.0;
  double f = lambda * aux_density_eval(model.aux, y.location, y.aux);
  if (!model.marks.degenerate) f *= fidi_density_eval(model.marks, schedule, y.u).value;
  return f;
}

double conditional_intensity(const ParametricModel& model, const std::vector<SampledPoint>& history,
                             const SampledPoint& y, const SampleSchedule& schedule, const Window& w) {
  temporal_ground(model, w);
  if (!y.location.t) throw ValidationError("conditional intensity: point without time");
  double prev = kNegInf;
  for (const auto& h : history) {
    if (!h.location.t) throw ValidationError("conditional intensity: history point without time");
    if (*h.location.t < prev) throw ValidationError("conditional intensity: history is not time-sorted");
    prev = *h.location.t;
  }
  // Poisson families: the history strictly before t does not enter lambda*_G.
  return intensity_functional(model, y, schedule, w);
}

double loglik_temporal(const ParametricModel& model, const std::vector<SampledPoint>& data, const Window& w,
                       const SampleSchedule& schedule, int resolution) {
  temporal_ground(model, w);
  for (const auto& y : data) {
    if (!y.location.t) throw ValidationError("loglik: data point without time");
  }
  return poisson_pseudolikelihood(model, data, w, schedule, resolution);
}

JanossyValue log_janossy_density(const ParametricModel& model, const std::vector<SampledPoint>& points,
                                 const Window& w, const SampleSchedule& schedule, int resolution) {
  if (const auto* g = std::get_if<PairwiseGibbs>(&model.ground)) {
    g->validate();
    double v = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      v += std::log(g->beta) + log_mark_aux(model, points[i], schedule);
      for (std::size_t j = 0; j < i; ++j) {
        if (g->neighbours(points[i].location, points[j].location, w)) v += std::log(g->gamma);
      }
    }
    return {v, false};
  }
  double v = -ground_mass(model.ground, w, resolution);
  for (const auto& y : points) {
    const double lambda = intensity_functional(model, y, schedule, w);
    v += lambda > 0.0 ? std::log(lambda) : kNegInf;
  }
  return {v, true};
}

JanossyValue janossy_density(const ParametricModel& model, const std::vector<SampledPoint>& points,
                             const Window& w, const SampleSchedule& schedule, int resolution) {
  JanossyValue v = log_janossy_density(model, points, w, schedule, resolution);
  v.value = std::exp(v.value);
  return v;
}

double janossy_normalization(const ParametricModel& model, const Window& w, int n_max, int resolution) {
  if (!is_poisson(model.ground)) throw ValidationError("janossy normalization: Gibbs normalizing constant unknown");
  if (n_max < 0) throw ValidationError("janossy normalization: n_max must be >= 0");
  const double mu = ground_mass(model.ground, w, resolution);
  // J_n(Y^n) = e^{-mu} (int lambda_G)^n once marks and aux integrate to 1.
  double term = std::exp(-mu);
  double sum = term;
  for (int n = 1; n <= n_max; ++n) {
    term *= mu / n;
    sum += term;
  }
  return sum;
}

double density_wrt_poisson(const ParametricModel& model, const std::vector<SampledPoint>& points,
                           const ParametricModel& reference, const Window& w, const SampleSchedule& schedule,
                           int resolution) {
  if (!is_poisson(reference.ground)) throw ValidationError("density: reference must be a Poisson model");
  if (!is_poisson(model.ground)) throw ValidationError("density: Gibbs densities are unnormalized");
  if (!std::isfinite(model.aux.reference.total_mass()) || !std::isfinite(reference.aux.reference.total_mass())) {
    throw ValidationError("density: auxiliary reference measure is not finite");
  }
  const double mu_ref = ground_mass(reference.ground, w, resolution);
  if (!std::isfinite(mu_ref)) throw ValidationError("density: reference intensity measure is not finite");
  double v = mu_ref - ground_mass(model.ground, w, resolution);
  for (const auto& y : points) {
    const double lambda = intensity_functional(model, y, schedule, w);
    if (lambda == 0.0) return 0.0;
    const double lambda_ref = intensity_functional(reference, y, schedule, w);
    if (!(lambda_ref > 0.0)) throw NumericalError("density: model is not absolutely continuous w.r.t. the reference");
    v += std::log(lambda) - std::log(lambda_ref);
  }
  return std::exp(v);
}

double papangelou(const ParametricModel& model, const SampledPoint& y, const std::vector<SampledPoint>& phi,
                  const Window& w, const SampleSchedule& schedule) {
  for (const auto& p : phi) {
    if (p.location == y.location) return 0.0;
  }
  const auto* g = std::get_if<PairwiseGibbs>(&model.ground);
  if (!g) return intensity_functional(model, y, schedule, w);
  g->validate();
  if (g->gamma == 0.0) {
    for (std::size_t i = 0; i < phi.size(); ++i) {
      for (std::size_t j = 0; j < i; ++j) {
        if (g->neighbours(phi[i].location, phi[j].location, w)) {
          throw NumericalError("papangelou: p(phi) = 0");
        }
      }
    }
  }
  const int k = neighbour_count(*g, y.location, phi, w, nullptr);
  double f = g->beta * std::pow(g->gamma, k);
  if (f == 0.0) return 0.0;
  return f * std::exp(log_mark_aux(model, y, schedule));
}

double pseudolikelihood(const ParametricModel& model, const std::vector<SampledPoint>& data, const Window& w,
                        const SampleSchedule& schedule, int resolution) {
  if (const auto* g = std::get_if<PairwiseGibbs>(&model.ground)) {
    g->validate();
    return gibbs_pseudolikelihood(model, *g, data, gibbs_counts(*g, data, w, resolution), schedule);
  }
  return poisson_pseudolikelihood(model, data, w, schedule, resolution);
}

FitResult fit_mle_temporal(const ParameterMap& map, const std::vector<SampledPoint>& data, const Window& w,
                           const SampleSchedule& schedule, std::vector<double> theta0, const OptimizeOptions& options,
                           int resolution) {
  map.validate();
  temporal_ground(map.build(theta0), w);
  return minimize_negative(
      [&](std::span<const double> th) { return loglik_temporal(map.build(th), data, w, schedule, resolution); }, map,
      std::move(theta0), options, "mle-temporal");
}

FitResult fit_mle_janossy(const ParameterMap& map, const std::vector<SampledPoint>& data, const Window& w,
                          const SampleSchedule& schedule, std::vector<double> theta0, const OptimizeOptions& options,
                          int resolution) {
  map.validate();
  if (!is_poisson(map.build(theta0).ground)) {
    throw ValidationError("mle-janossy needs a normalized (Poisson) model; use the pseudo-likelihood for Gibbs");
  }
  return minimize_negative(
      [&](std::span<const double> th) {
        return log_janossy_density(map.build(th), data, w, schedule, resolution).value;
      },
      map, std::move(theta0), options, "mle-janossy");
}

FitResult fit_pseudolikelihood(const ParameterMap& map, const std::vector<SampledPoint>& data, const Window& w,
                               const SampleSchedule& schedule, std::vector<double> theta0,
                               const OptimizeOptions& options, int resolution) {
  map.validate();
  std::map<std::pair<double, double>, GibbsCounts> cache;
  return minimize_negative(
      [&](std::span<const double> th) {
        const ParametricModel model = map.build(th);
        const auto* g = std::get_if<PairwiseGibbs>(&model.ground);
        if (!g) return poisson_pseudolikelihood(model, data, w, schedule, resolution);
        g->validate();
        const std::pair<double, double> key{g->range, g->time_range.value_or(-1.0)};
        auto it = cache.find(key);
        if (it == cache.end()) it = cache.emplace(key, gibbs_counts(*g, data, w, resolution)).first;
        return gibbs_pseudolikelihood(model, *g, data, it->second, schedule);
      },
      map, std::move(theta0), options, "pseudo");
}

FitResult least_squares_marks(const GrowthFamily& family, const std::vector<SampledPoint>& data, const Window& w,
                              const SampleSchedule& schedule, std::vector<double> theta0,
                              const LeastSquaresOptions& options) {
  if (!family.build) throw ValidationError("least squares: family builder missing");
  if (!w.temporal()) throw ValidationError("least squares: growth-interaction data need a temporal window");
  std::vector<GrowthPoint> points;
  double lifetime_sum = 0.0;
  std::size_t lifetimes = 0;
  for (const auto& y : data) {
    if (!y.location.t) throw ValidationError("least squares: data point without birth time");
    if (y.u.size() != schedule.size()) throw ValidationError("least squares: one sample per schedule time required");
    const double life = y.aux.continuous.empty() ? kInfinity : y.aux.continuous.front();
    if (!y.aux.continuous.empty()) {
      lifetime_sum += life;
      ++lifetimes;
    }
    points.push_back({y.location, life});
  }

  auto fit_on = [&](const std::vector<GrowthPoint>& all, const Window& metric, std::vector<double> start) {
    auto objective = [&](std::span<const double> th) {
      GrowthInteraction model = family.build(th);
      model.noise = {};
      std::vector<CadlagPath> paths;
      try {
        paths = gi_integrate(all, model, family.step, w.horizon(), RngSeed{0}, &metric);
      } catch (const NumericalError&) {
        return std::numeric_limits<double>::infinity();
      }
      double s = 0.0;
      for (std::size_t i = 0; i < data.size(); ++i) {
        for (std::size_t j = 0; j < schedule.size(); ++j) {
          const double r = data[i].u[j] - paths[i](schedule[j]);
          s += r * r;
        }
      }
      return s;
    };
    FitResult r = optimize(objective, std::move(start), family.lower, family.upper, options.optimize);
    r.scheme = "least-squares";
    return r;
  };

  FitResult result = fit_on(points, w, std::move(theta0));
  if (options.edge_correction == EdgeCorrection::None) return result;

  double pad = 0.0;
  for (std::size_t k = 0; k < w.dimension(); ++k) pad = std::max(pad, w.side(k));
  pad *= options.margin;
  std::vector<double> lo = w.lower(), hi = w.upper();
  for (auto& v : lo) v -= pad;
  for (auto& v : hi) v += pad;
  const Window torus(lo, hi, w.horizon(), true, w.time_scale());
  const double inflation = torus.spatial_volume() / w.spatial_volume();
  const double arrivals = static_cast<double>(data.size()) / w.horizon() * inflation;
  const double death_rate = lifetimes > 0 && lifetime_sum > 0.0 ? lifetimes / lifetime_sum : 1.0;

  for (int round = 0; round < options.correction_rounds; ++round) {
    std::vector<GrowthPoint> all = points;
    if (arrivals > 0.0) {
      const auto imputed = simulate_immigration_death(ImmigrationDeath{arrivals, death_rate}, torus,
                                                      replicate_seed(options.seed, static_cast<std::uint64_t>(round)));
      for (const auto& r : imputed) {
        if (w.contains_spatial(r.location.x)) continue;
        all.push_back({r.location, lifetimes > 0 ? r.lifetime : kInfinity});
      }
    }
    FitResult next = fit_on(all, torus, result.theta);
    next.iterations += result.iterations;
    result = std::move(next);
  }
  return result;
}

}  // namespace cfmpp
