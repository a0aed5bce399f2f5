#include "cfmpp/marks.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace cfmpp {

namespace {

void require_params(const std::string& what, const std::string& name, const std::vector<double>& params,
                    std::size_t n) {
  if (params.size() != n) {
    throw ValidationError(what + " '" + name + "' expects " + std::to_string(n) + " parameter(s), got " +
                          std::to_string(params.size()));
  }
}

double gaussian_pdf(double x, double mean, double variance) {
  const double z = x - mean;
  return std::exp(-0.5 * z * z / variance) / std::sqrt(2.0 * std::numbers::pi * variance);
}

void check_grid(const std::vector<double>& grid, const Window* window) {
  if (grid.empty()) throw ValidationError("marks: empty time grid");
  if (window && window->temporal()) {
    const double tol = 1e-9 * std::max(1.0, window->horizon());
    if (grid.front() > tol || grid.back() < window->horizon() - tol) {
      throw ValidationError("marks: grid does not cover [0, T*]");
    }
  }
}

Support full_support(const std::vector<double>& grid) { return Support{grid.front(), kInfinity}; }

CadlagPath brownian_path(const std::vector<double>& grid, double start, double scale,
                         const std::function<double(double, double)>& drift,
                         const std::function<double(double, double)>& diffusion, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> values(grid.size());
  double m = start;
  values[0] = m;
  for (std::size_t j = 1; j < grid.size(); ++j) {
    const double dt = grid[j] - grid[j - 1];
    const double t = grid[j - 1];
    const double a = drift ? drift(m, t) : 0.0;
    const double b = diffusion ? diffusion(m, t) : scale;
    if (b < 0.0) throw ValidationError("diffusion coefficient must be >= 0");
    m += a * dt + b * std::sqrt(dt) * normal(rng);
    values[j] = m;
  }
  return CadlagPath(grid, std::move(values), full_support(grid), Interpolation::Linear);
}

}  // namespace

GrowthFunction growth_function(const std::string& name, const std::vector<double>& params) {
  if (name == "linear") {
    require_params("growth", name, params, 2);
    const double a = params[0], b = params[1];
    return [a, b](double m) { return a * (b - m); };
  }
  if (name == "logistic") {
    require_params("growth", name, params, 2);
    const double a = params[0], b = params[1];
    if (b == 0.0) throw ValidationError("growth 'logistic': capacity must be non-zero");
    return [a, b](double m) { return a * m * (1.0 - m / b); };
  }
  throw ValidationError("unknown growth function '" + name + "'");
}

InteractionFunction interaction_function(const std::string& name, const std::vector<double>& params) {
  if (name == "none") {
    require_params("interaction", name, params, 0);
    return {};
  }
  if (name == "distance_decay") {
    require_params("interaction", name, params, 2);
    const double c = params[0], r = params[1];
    if (!(r > 0.0)) throw ValidationError("interaction 'distance_decay': scale must be positive");
    return [c, r](double d, double mi, double mj) { return c * mi * mj * std::exp(-d / r); };
  }
  if (name == "disk_overlap") {
    require_params("interaction", name, params, 1);
    const double c = params[0];
    return [c](double d, double mi, double mj) { return c * std::max(0.0, mi + mj - d); };
  }
  throw ValidationError("unknown interaction function '" + name + "'");
}

GrowthFunction noise_function(const std::string& name, const std::vector<double>& params) {
  if (name == "none") {
    require_params("noise", name, params, 0);
    return {};
  }
  if (name == "constant") {
    require_params("noise", name, params, 1);
    const double s = params[0];
    if (s < 0.0) throw ValidationError("noise 'constant': sigma must be >= 0");
    return [s](double) { return s; };
  }
  if (name == "proportional") {
    require_params("noise", name, params, 1);
    const double s = params[0];
    if (s < 0.0) throw ValidationError("noise 'proportional': sigma must be >= 0");
    return [s](double m) { return s * std::abs(m); };
  }
  throw ValidationError("unknown noise function '" + name + "'");
}

std::vector<CadlagPath> attach_marks(const std::vector<GroundPoint>& ground, const MarkModel& model,
                                     const std::vector<double>& grid, RngSeed seed, const Window* window) {
  check_grid(grid, window);
  return std::visit(
      [&](const auto& m) -> std::vector<CadlagPath> {
        using M = std::decay_t<decltype(m)>;
        std::vector<CadlagPath> out;
        out.reserve(ground.size());
        if constexpr (std::is_same_v<M, DeterministicMarks>) {
          if (!m.fn) throw ValidationError("deterministic marks: function missing");
          for (const auto& p : ground) {
            out.push_back(CadlagPath::sample(
                grid, [&](double t) { return m.fn(p.location, p.aux, t); }, full_support(grid)));
          }
        } else if constexpr (std::is_same_v<M, WienerMarks>) {
          if (!(m.scale >= 0.0)) throw ValidationError("wiener marks: scale must be >= 0");
          Rng rng = make_rng(seed);
          for (std::size_t i = 0; i < ground.size(); ++i) {
            out.push_back(brownian_path(grid, 0.0, m.scale, {}, {}, rng));
          }
        } else if constexpr (std::is_same_v<M, DiffusionMarks>) {
          Rng rng = make_rng(seed);
          for (std::size_t i = 0; i < ground.size(); ++i) {
            out.push_back(brownian_path(grid, m.initial, 0.0, m.drift, m.diffusion, rng));
          }
        } else if constexpr (std::is_same_v<M, GrowthInteraction>) {
          if (grid.size() < 2) throw ValidationError("growth-interaction: grid needs at least two points");
          std::vector<GrowthPoint> pts;
          for (const auto& p : ground) {
            if (!p.location.t) throw ValidationError("growth-interaction marks need a temporal window");
            pts.push_back({p.location, p.aux.continuous.empty() ? kInfinity : p.aux.continuous.front()});
          }
          out = gi_integrate(pts, m, grid[1] - grid[0], grid.back(), seed, window);
        } else if constexpr (std::is_same_v<M, GeostatisticalMarks>) {
          out = geostat_marking(ground, m, grid, seed, window);
        } else {
          if (!m.field) throw ValidationError("intensity-dependent marks: no field");
          std::vector<Location> locs;
          for (const auto& p : ground) locs.push_back(p.location);
          out = intensity_dependent_marking(*m.field, locs, grid);
        }
        return out;
      },
      model);
}

std::vector<CadlagPath> gi_integrate(const std::vector<GrowthPoint>& points, const GrowthInteraction& model,
                                     double step, double horizon, RngSeed seed, const Window* window) {
  if (!model.growth) throw ValidationError("growth-interaction: growth function missing");
  if (!(model.initial >= 0.0)) throw ValidationError("growth-interaction: initial mark must be >= 0");
  const std::vector<double> grid = uniform_grid(horizon, step);
  const std::size_t n = points.size();

  std::vector<double> birth(n), death(n);
  std::vector<double> events(grid);
  for (std::size_t i = 0; i < n; ++i) {
    if (!points[i].location.t) throw ValidationError("growth-interaction: point without birth time");
    birth[i] = *points[i].location.t;
    if (birth[i] < 0.0 || birth[i] > horizon) throw ValidationError("growth-interaction: birth outside [0, T*]");
    if (!(points[i].lifetime >= 0.0)) throw ValidationError("growth-interaction: negative lifetime");
    // Deaths past the horizon stay uncensored so the support covers T*.
    death[i] = birth[i] + points[i].lifetime;
    events.push_back(birth[i]);
    if (death[i] < horizon) events.push_back(death[i]);
  }
  std::sort(events.begin(), events.end());
  events.erase(std::unique(events.begin(), events.end()), events.end());

  std::vector<double> dist(n * n, 0.0);
  if (model.interaction) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < i; ++j) {
        double d = 0.0;
        if (window) {
          d = window->spatial_distance(points[i].location.x, points[j].location.x);
        } else {
          for (std::size_t k = 0; k < points[i].location.x.size(); ++k) {
            const double z = points[i].location.x[k] - points[j].location.x[k];
            d += z * z;
          }
          d = std::sqrt(d);
        }
        dist[i * n + j] = dist[j * n + i] = d;
      }
    }
  }

  std::vector<std::vector<double>> values(n, std::vector<double>(grid.size(), 0.0));
  std::vector<double> m(n, 0.0);
  std::vector<char> started(n, 0), alive(n, 0), absorbed(n, 0);
  std::vector<std::size_t> active;

  auto derivative = [&](const std::vector<double>& state, std::vector<double>& out) {
    for (std::size_t a = 0; a < active.size(); ++a) {
      const std::size_t i = active[a];
      double rate = model.growth(state[i]);
      if (model.interaction) {
        for (std::size_t b = 0; b < active.size(); ++b) {
          const std::size_t j = active[b];
          if (j == i) continue;
          const double d = dist[i * n + j];
          if (model.cutoff && d > *model.cutoff) continue;
          rate -= model.interaction(d, state[i], state[j]);
        }
      }
      out[i] = rate;
    }
  };

  Rng rng = make_rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> k1(n), k2(n), k3(n), k4(n), tmp(n);
  std::size_t next_grid = 0;

  for (std::size_t e = 0; e < events.size(); ++e) {
    const double tau = events[e];
    for (std::size_t i = 0; i < n; ++i) {
      if (alive[i] && death[i] <= tau) alive[i] = 0;
      if (!started[i] && birth[i] <= tau) {
        started[i] = 1;
        if (death[i] > tau) {
          alive[i] = 1;
          m[i] = model.initial;
        }
      }
    }
    active.clear();
    for (std::size_t i = 0; i < n; ++i) {
      if (alive[i] && !absorbed[i]) active.push_back(i);
    }
    if (next_grid < grid.size() && grid[next_grid] == tau) {
      for (std::size_t i = 0; i < n; ++i) {
        if (alive[i]) values[i][next_grid] = absorbed[i] ? 0.0 : m[i];
      }
      ++next_grid;
    }
    if (e + 1 == events.size() || active.empty()) continue;

    const double h = events[e + 1] - tau;
    if (!model.noise) {
      derivative(m, k1);
      tmp = m;
      for (std::size_t i : active) tmp[i] = m[i] + 0.5 * h * k1[i];
      derivative(tmp, k2);
      for (std::size_t i : active) tmp[i] = m[i] + 0.5 * h * k2[i];
      derivative(tmp, k3);
      for (std::size_t i : active) tmp[i] = m[i] + h * k3[i];
      derivative(tmp, k4);
      for (std::size_t i : active) m[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    } else {
      derivative(m, k1);
      const double root = std::sqrt(h);
      for (std::size_t i : active) {
        const double s = model.noise(m[i]);
        if (s < 0.0) throw ValidationError("growth-interaction: noise must be >= 0");
        tmp[i] = m[i] + k1[i] * h + s * root * normal(rng);
      }
      for (std::size_t i : active) m[i] = tmp[i];
    }
    for (std::size_t i : active) {
      if (!std::isfinite(m[i])) throw NumericalError("growth-interaction: mark diverged");
      if (m[i] >= 0.0) continue;
      switch (model.policy) {
        case NegativeMarkPolicy::Clamp: m[i] = 0.0; break;
        case NegativeMarkPolicy::Absorb:
          m[i] = 0.0;
          absorbed[i] = 1;
          break;
        case NegativeMarkPolicy::Error: throw NumericalError("growth-interaction: negative mark");
      }
    }
  }

  std::vector<CadlagPath> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.emplace_back(grid, std::move(values[i]), Support{birth[i], death[i]}, Interpolation::Step);
  }
  return out;
}

std::vector<CadlagPath> geostat_marking(const std::vector<GroundPoint>& ground, const GeostatisticalMarks& field,
                                        const std::vector<double>& grid, RngSeed seed, const Window* window) {
  check_grid(grid, window);
  if (field.fields.empty()) throw ValidationError("geostatistical marks: no field given");
  std::vector<std::vector<std::size_t>> members(field.fields.size());
  for (std::size_t i = 0; i < ground.size(); ++i) {
    std::size_t f = 0;
    if (field.fields.size() > 1) {
      const auto& type = ground[i].aux.type;
      if (!type || *type < 1 || static_cast<std::size_t>(*type) > field.fields.size()) {
        throw ValidationError("geostatistical marks: aux type does not select a field");
      }
      f = static_cast<std::size_t>(*type - 1);
    }
    members[f].push_back(i);
  }

  std::vector<CadlagPath> out(ground.size());
  Rng rng = make_rng(seed);
  const std::size_t k = grid.size();
  for (std::size_t f = 0; f < field.fields.size(); ++f) {
    const auto& spec = field.fields[f];
    spec.kernel.validate();
    if (members[f].empty()) continue;
    std::vector<Location> sites;
    std::vector<double> mean;
    sites.reserve(members[f].size() * k);
    for (std::size_t i : members[f]) {
      for (double t : grid) {
        sites.push_back(Location{ground[i].location.x, t});
        mean.push_back(spec.mean(sites.back()));
      }
    }
    GaussianSampler sampler(covariance_matrix(spec.kernel, sites, window), std::move(mean));
    const std::vector<double> z = sampler.draw(rng);
    for (std::size_t a = 0; a < members[f].size(); ++a) {
      std::vector<double> values(z.begin() + static_cast<std::ptrdiff_t>(a * k),
                                 z.begin() + static_cast<std::ptrdiff_t>((a + 1) * k));
      out[members[f][a]] = CadlagPath(grid, std::move(values), full_support(grid), Interpolation::Linear);
    }
  }
  return out;
}

std::vector<CadlagPath> intensity_dependent_marking(const FieldGrid& field, const std::vector<Location>& ground,
                                                    const std::vector<double>& grid) {
  check_grid(grid, nullptr);
  std::vector<CadlagPath> out;
  out.reserve(ground.size());
  for (const auto& g : ground) {
    std::vector<double> values(grid.size());
    for (std::size_t j = 0; j < grid.size(); ++j) {
      values[j] = field.at(g.x, field.temporal() ? std::optional<double>(grid[j]) : std::nullopt);
    }
    out.emplace_back(grid, std::move(values), full_support(grid), Interpolation::Step);
  }
  return out;
}

std::vector<double> sample_at(const CadlagPath& mark, const SampleSchedule& schedule) {
  std::vector<double> u;
  u.reserve(schedule.size());
  for (double s : schedule.times()) u.push_back(mark(s));
  return u;
}

FidiDensitySpec FidiDensitySpec::brownian(double sigma) {
  if (!(sigma > 0.0)) throw ValidationError("brownian fidi: sigma must be positive");
  const double var = sigma * sigma;
  FidiDensitySpec spec;
  spec.initial = [var](double u, double s) {
    if (!(s > 0.0)) throw ValidationError("brownian fidi: initial density undefined at s <= 0");
    return gaussian_pdf(u, 0.0, var * s);
  };
  spec.transition = [var](double u, double t, double u_prev, double s_prev) {
    if (!(t > s_prev)) throw ValidationError("brownian fidi: transition needs s_prev < t");
    return gaussian_pdf(u, u_prev, var * (t - s_prev));
  };
  return spec;
}

FidiDensitySpec FidiDensitySpec::deterministic() {
  FidiDensitySpec spec;
  spec.degenerate = true;
  return spec;
}

DensityValue fidi_density_eval(const FidiDensitySpec& spec, const SampleSchedule& schedule,
                               const std::vector<double>& u) {
  if (u.size() != schedule.size()) throw ValidationError("fidi density: one value per sampling time required");
  if (spec.degenerate) return {kInfinity, true};
  if (!spec.initial) throw ValidationError("fidi density: initial density missing");
  double value = spec.initial(u[0], schedule[0]);
  for (std::size_t j = 1; j < u.size(); ++j) {
    if (!spec.transition) throw ValidationError("fidi density: transition density undefined");
    value *= spec.transition(u[j], schedule[j], u[j - 1], schedule[j - 1]);
  }
  if (!(value >= 0.0)) throw NumericalError("fidi density: negative or undefined value");
  return {value, false};
}

DensityValue fidi_density_eval(const FidiDensitySpec& spec, const SampleSchedule& schedule,
                               const std::vector<std::vector<double>>& u) {
  if (spec.degenerate) return {kInfinity, true};
  double value = 1.0;
  for (const auto& row : u) value *= fidi_density_eval(spec, schedule, row).value;
  return {value, false};
}

AuxDensitySpec AuxDensitySpec::uniform_types(int types) {
  if (types < 1) throw ValidationError("aux density: at least one type required");
  AuxDensitySpec spec;
  spec.reference.kind = AuxReference::Kind::Counting;
  spec.reference.types = types;
  return spec;
}

AuxDensitySpec AuxDensitySpec::exponential(double rate, AuxReference::Kind reference) {
  if (!(rate > 0.0)) throw ValidationError("aux density: exponential rate must be positive");
  if (reference != AuxReference::Kind::Lebesgue && reference != AuxReference::Kind::UnitExponential) {
    throw ValidationError("aux density: exponential lifetimes need a Lebesgue or unit-exponential reference");
  }
  AuxDensitySpec spec;
  spec.reference.kind = reference;
  const double tilt = reference == AuxReference::Kind::Lebesgue ? rate : rate - 1.0;
  spec.continuous = [rate, tilt](const std::vector<double>& l, const Location&) {
    double f = 1.0;
    for (double v : l) {
      if (v < 0.0) throw ValidationError("aux density: lifetime must be >= 0");
      f *= rate * std::exp(-tilt * v);
    }
    return f;
  };
  return spec;
}

double aux_density_eval(const AuxDensitySpec& spec, const Location& location, const AuxMark& aux) {
  aux.validate();
  double f = 1.0;
  if (aux.type) {
    const int k = spec.reference.types;
    if (*aux.type < 1 || *aux.type > k) throw ValidationError("aux density: type outside {1..k_A}");
    if (spec.type_probabilities) {
      const auto probs = spec.type_probabilities(location);
      if (probs.size() != static_cast<std::size_t>(k)) {
        throw ValidationError("aux density: type probability vector has wrong length");
      }
      f *= probs[static_cast<std::size_t>(*aux.type - 1)];
    } else {
      f /= k;
    }
  }
  if (!aux.continuous.empty()) {
    if (!spec.continuous) throw ValidationError("aux density: no density for continuous aux marks");
    if (spec.reference.kind == AuxReference::Kind::UnitExponential) {
      for (double v : aux.continuous) {
        if (v < 0.0) throw ValidationError("aux density: value outside [0, inf)");
      }
    } else if (spec.reference.kind == AuxReference::Kind::Uniform) {
      for (double v : aux.continuous) {
        if (v < spec.reference.lower || v > spec.reference.upper) {
          throw ValidationError("aux density: value outside the uniform support");
        }
      }
    }
    f *= spec.continuous(aux.continuous, location);
  }
  return f;
}

double aux_density_eval(const AuxDensitySpec& spec, const std::vector<Location>& locations,
                        const std::vector<AuxMark>& aux) {
  if (locations.size() != aux.size()) throw ValidationError("aux density: locations / marks size mismatch");
  if (spec.joint) return spec.joint(locations, aux);
  double f = 1.0;
  for (std::size_t i = 0; i < aux.size(); ++i) f *= aux_density_eval(spec, locations[i], aux[i]);
  return f;
}

}  // namespace cfmpp
