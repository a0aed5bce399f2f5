#include "cfmpp/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Dense>

#include "cfmpp/marks.hpp"
#include "cfmpp/optimize.hpp"

namespace cfmpp {

namespace {

double sphere_surface(std::size_t d, double r) {
  switch (d) {
    case 1: return 2.0;
    case 2: return 2.0 * std::numbers::pi * r;
    default: return 4.0 * std::numbers::pi * r * r;
  }
}

double epanechnikov(double u, double h) {
  const double z = u / h;
  return std::abs(z) <= 1.0 ? 0.75 / h * (1.0 - z * z) : 0.0;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

void check_lags(const std::vector<double>& lags) {
  for (std::size_t j = 0; j < lags.size(); ++j) {
    if (!(lags[j] > 0.0)) throw ValidationError("pcf: lags must be positive");
    if (j > 0 && !(lags[j] > lags[j - 1])) throw ValidationError("pcf: lags must be increasing");
  }
}

/// sum over ordered pairs i in class a, j in class b, i != j of
/// k_h(r - |x_i - x_j|) / (s_d r^{d-1} e(x_j - x_i)), divided by `norm`.
std::vector<double> pair_kernel_sum(const std::vector<const std::vector<double>*>& xs, const std::vector<int>& cls,
                                    int a, int b, const std::vector<double>& lags, double h, const Window& w,
                                    double norm) {
  const std::size_t d = w.dimension();
  std::vector<double> out(lags.size(), 0.0);
  if (norm <= 0.0) return out;
  const double volume = w.spatial_volume();
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (cls[i] != a) continue;
    for (std::size_t j = 0; j < xs.size(); ++j) {
      if (j == i || cls[j] != b) continue;
      const std::vector<double> z = w.displacement(*xs[i], *xs[j]);
      double dist = 0.0;
      double edge = 1.0;
      for (std::size_t k = 0; k < d; ++k) {
        dist += z[k] * z[k];
        edge *= w.side(k) - std::abs(z[k]);
      }
      dist = std::sqrt(dist);
      if (w.torus()) edge = volume;
      if (!(edge > 0.0)) continue;
      for (std::size_t m = 0; m < lags.size(); ++m) {
        const double k = epanechnikov(lags[m] - dist, h);
        if (k > 0.0) out[m] += k / (sphere_surface(d, lags[m]) * edge);
      }
    }
  }
  for (double& v : out) v /= norm;
  return out;
}

std::vector<int> axis_cells(int n, std::size_t axes) { return std::vector<int>(axes, n); }

}  // namespace

double IntensitySurface::cell_volume() const {
  double v = 1.0;
  for (double e : cell) v *= e;
  return v;
}

double IntensitySurface::integral() const {
  double s = 0.0;
  for (double v : values) s += v;
  return s * cell_volume();
}

std::vector<double> IntensitySurface::cell_center(std::size_t index) const {
  std::vector<double> c(shape.size());
  for (std::size_t k = shape.size(); k-- > 0;) {
    const auto n = static_cast<std::size_t>(shape[k]);
    c[k] = lower[k] + (static_cast<double>(index % n) + 0.5) * cell[k];
    index /= n;
  }
  return c;
}

IntensitySurface intensity_box(const Configuration& c, int cells_per_axis, int time_bins) {
  if (cells_per_axis < 1 || time_bins < 0) throw ValidationError("intensity: cell counts must be positive");
  const Window& w = c.window();
  const bool timed = time_bins > 0;
  if (timed && !w.temporal()) throw ValidationError("intensity: time bins need a temporal window");
  IntensitySurface s;
  s.lower = w.lower();
  s.shape = axis_cells(cells_per_axis, w.dimension());
  for (std::size_t k = 0; k < w.dimension(); ++k) s.cell.push_back(w.side(k) / cells_per_axis);
  if (timed) {
    s.lower.push_back(0.0);
    s.shape.push_back(time_bins);
    s.cell.push_back(w.horizon() / time_bins);
  }
  std::size_t total = 1;
  for (int n : s.shape) total *= static_cast<std::size_t>(n);
  std::vector<double> counts(total, 0.0);
  for (const auto& p : c.points()) {
    std::size_t index = 0;
    for (std::size_t k = 0; k < s.shape.size(); ++k) {
      const double v = k < w.dimension() ? p.location.x[k] : *p.location.t;
      const int cell = std::clamp(static_cast<int>(std::floor((v - s.lower[k]) / s.cell[k])), 0, s.shape[k] - 1);
      index = index * static_cast<std::size_t>(s.shape[k]) + static_cast<std::size_t>(cell);
    }
    counts[index] += 1.0;
  }
  double volume = s.cell_volume();
  // Without time bins the surface is a spatio-temporal intensity averaged over [0, T*].
  if (!timed && w.temporal()) volume *= w.horizon();
  s.values.resize(total);
  for (std::size_t i = 0; i < total; ++i) s.values[i] = counts[i] / volume;
  return s;
}

IntensitySurface intensity_kernel(const Configuration& c, double bandwidth, int resolution) {
  if (!(bandwidth > 0.0)) throw ValidationError("intensity: bandwidth must be positive");
  if (resolution < 1) throw ValidationError("intensity: resolution must be positive");
  const Window& w = c.window();
  const std::size_t d = w.dimension();
  IntensitySurface s;
  s.lower = w.lower();
  s.shape = axis_cells(resolution, d);
  s.bandwidth = bandwidth;
  for (std::size_t k = 0; k < d; ++k) s.cell.push_back(w.side(k) / resolution);
  std::size_t total = 1;
  for (int n : s.shape) total *= static_cast<std::size_t>(n);
  s.values.assign(total, 0.0);
  const double norm = std::pow(2.0 * std::numbers::pi * bandwidth * bandwidth, -0.5 * static_cast<double>(d));
  const double time_norm = w.temporal() ? w.horizon() : 1.0;
  for (std::size_t idx = 0; idx < total; ++idx) {
    const std::vector<double> x = s.cell_center(idx);
    double edge = 1.0;
    if (!w.torus()) {
      for (std::size_t k = 0; k < d; ++k) {
        edge *= normal_cdf((w.upper()[k] - x[k]) / bandwidth) - normal_cdf((w.lower()[k] - x[k]) / bandwidth);
      }
    }
    double sum = 0.0;
    for (const auto& p : c.points()) {
      const double r = w.spatial_distance(x, p.location.x);
      sum += norm * std::exp(-0.5 * r * r / (bandwidth * bandwidth));
    }
    s.values[idx] = sum / (edge * time_norm);
  }
  return s;
}

PcfEstimate pcf_ground(const Configuration& c, const std::vector<double>& lags, std::optional<double> bandwidth) {
  const auto classes = pcf_mark_sampled(c, SampleSchedule({0.0}), [](const std::vector<double>&) { return 0; }, 1,
                                        lags, bandwidth);
  return classes.at({0, 0});
}

std::map<std::pair<int, int>, PcfEstimate> pcf_mark_sampled(const Configuration& c, const SampleSchedule& schedule,
                                                            const MarkClassifier& classify, int classes,
                                                            const std::vector<double>& lags,
                                                            std::optional<double> bandwidth) {
  const Window& w = c.window();
  const std::size_t n = c.size();
  if (n < 2) throw ValidationError("pcf: too few points (need at least 2)");
  if (classes < 1) throw ValidationError("pcf: at least one mark class required");
  for (double s : schedule.times()) {
    if (s < 0.0 || (w.temporal() && s > w.horizon())) throw ValidationError("pcf: schedule time outside T");
  }
  check_lags(lags);
  const double volume = w.spatial_volume();
  const double lambda = static_cast<double>(n) / volume;
  const double h = bandwidth.value_or(0.15 / std::sqrt(lambda));
  if (!(h > 0.0)) throw ValidationError("pcf: bandwidth must be positive");

  std::vector<const std::vector<double>*> xs;
  std::vector<int> cls;
  std::vector<double> counts(static_cast<std::size_t>(classes), 0.0);
  for (const auto& p : c.points()) {
    xs.push_back(&p.location.x);
    const int k = classes == 1 ? 0 : classify(sample_at(p.mark, schedule));
    if (k < 0 || k >= classes) throw ValidationError("pcf: classifier returned an unknown class");
    cls.push_back(k);
    counts[static_cast<std::size_t>(k)] += 1.0;
  }

  std::map<std::pair<int, int>, PcfEstimate> out;
  for (int a = 0; a < classes; ++a) {
    for (int b = 0; b < classes; ++b) {
      const double na = counts[static_cast<std::size_t>(a)];
      const double nb = counts[static_cast<std::size_t>(b)];
      const double norm = (a == b ? na * (na - 1.0) : na * nb) / (volume * volume);
      PcfEstimate e;
      e.lags = lags;
      e.bandwidth = h;
      e.edge_correction = w.torus() ? "torus" : "translation";
      e.values = pair_kernel_sum(xs, cls, a, b, lags, h, w, norm);
      out.emplace(std::make_pair(a, b), std::move(e));
    }
  }
  return out;
}

double half_squared_distance(const CadlagPath& a, const CadlagPath& b) {
  if (a.grid() != b.grid()) throw ValidationError("variogram: curves must share a grid");
  const auto& t = a.grid();
  double s = 0.0;
  for (std::size_t j = 0; j + 1 < t.size(); ++j) {
    const double d0 = a.values()[j] - b.values()[j];
    const double d1 = a.values()[j + 1] - b.values()[j + 1];
    s += 0.5 * (t[j + 1] - t[j]) * (d0 * d0 + d1 * d1);
  }
  return 0.5 * s;
}

VariogramEstimate trace_variogram(const std::vector<FunctionalDatum>& curves, std::optional<double> bin_width,
                                  const Window* window) {
  const std::size_t n = curves.size();
  if (n < 2) throw ValidationError("variogram: at least two curves required");
  for (const auto& c : curves) {
    if (c.curve.grid() != curves.front().curve.grid()) throw ValidationError("variogram: curves must share a grid");
    if (c.x.size() != curves.front().x.size()) throw ValidationError("variogram: site dimension mismatch");
  }
  auto distance = [&](const std::vector<double>& a, const std::vector<double>& b) {
    if (window) return window->spatial_distance(a, b);
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
    return std::sqrt(s);
  };

  std::vector<double> pair_d, pair_v;
  double max_d = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      pair_d.push_back(distance(curves[i].x, curves[j].x));
      pair_v.push_back(half_squared_distance(curves[i].curve, curves[j].curve));
      max_d = std::max(max_d, pair_d.back());
    }
  }

  double diameter = max_d;
  if (window) {
    double s = 0.0;
    for (std::size_t k = 0; k < window->dimension(); ++k) {
      const double side = window->torus() ? 0.5 * window->side(k) : window->side(k);
      s += side * side;
    }
    diameter = std::sqrt(s);
  }
  const double width = bin_width.value_or(diameter / 15.0);
  if (!(width > 0.0)) throw ValidationError("variogram: bin width must be positive");
  const auto bins = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(std::max(max_d, diameter) / width - 1e-12)));

  VariogramEstimate e;
  for (std::size_t b = 0; b <= bins; ++b) e.edges.push_back(static_cast<double>(b) * width);
  e.gamma.assign(bins, 0.0);
  e.counts.assign(bins, 0);
  std::vector<double> dsum(bins, 0.0);
  for (std::size_t p = 0; p < pair_d.size(); ++p) {
    const auto b = std::min(bins - 1, static_cast<std::size_t>(pair_d[p] / width));
    e.gamma[b] += pair_v[p];
    dsum[b] += pair_d[p];
    ++e.counts[b];
  }
  for (std::size_t b = 0; b < bins; ++b) {
    if (e.counts[b] > 0) {
      e.gamma[b] /= static_cast<double>(e.counts[b]);
      e.centers.push_back(dsum[b] / static_cast<double>(e.counts[b]));
    } else {
      e.centers.push_back(0.5 * (e.edges[b] + e.edges[b + 1]));
    }
  }
  return e;
}

double VariogramModel::operator()(double h) const {
  if (h <= 0.0) return 0.0;
  const double r = h / range;
  switch (family) {
    case Family::Spherical: return nugget + partial_sill * (r < 1.0 ? 1.5 * r - 0.5 * r * r * r : 1.0);
    case Family::Exponential: return nugget + partial_sill * (1.0 - std::exp(-r));
  }
  return 0.0;
}

VariogramModel fit_variogram(const VariogramEstimate& estimate, VariogramModel::Family family) {
  double gmax = 0.0, hmax = 0.0;
  std::size_t used = 0;
  for (std::size_t b = 0; b < estimate.gamma.size(); ++b) {
    if (estimate.counts[b] == 0) continue;
    ++used;
    gmax = std::max(gmax, estimate.gamma[b]);
    hmax = std::max(hmax, estimate.centers[b]);
  }
  if (used == 0) throw ValidationError("variogram fit: no non-empty bins");
  if (!(hmax > 0.0)) hmax = 1.0;
  const double gscale = gmax > 0.0 ? gmax : 1.0;

  auto objective = [&](std::span<const double> th) {
    VariogramModel m{family, th[0], th[1], th[2]};
    double s = 0.0;
    for (std::size_t b = 0; b < estimate.gamma.size(); ++b) {
      if (estimate.counts[b] == 0) continue;
      const double r = estimate.gamma[b] - m(estimate.centers[b]);
      s += static_cast<double>(estimate.counts[b]) * r * r;
    }
    return s / (gscale * gscale);
  };
  const FitResult fit = optimize(objective, {0.1 * gmax, 0.9 * gmax, hmax / 3.0}, {0.0, 0.0, 1e-6 * hmax},
                                 {2.0 * gscale, 2.0 * gscale, 2.0 * hmax});
  return VariogramModel{family, fit.theta[0], fit.theta[1], fit.theta[2]};
}

KrigingResult kriging_predict(const std::vector<FunctionalDatum>& curves, const std::vector<double>& x0,
                              const VariogramModel& model, const Window* window) {
  const std::size_t n = curves.size();
  if (n == 0) throw ValidationError("kriging: no observed curves");
  for (const auto& c : curves) {
    if (c.curve.grid() != curves.front().curve.grid()) throw ValidationError("kriging: curves must share a grid");
    if (c.x.size() != x0.size()) throw ValidationError("kriging: site dimension mismatch");
  }
  if (!(model.range > 0.0)) throw ValidationError("kriging: variogram range must be positive");
  auto distance = [&](const std::vector<double>& a, const std::vector<double>& b) {
    if (window) return window->spatial_distance(a, b);
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
    return std::sqrt(s);
  };

  std::vector<double> weights(n, 0.0);
  std::optional<std::size_t> exact;
  for (std::size_t i = 0; i < n && !exact; ++i) {
    if (distance(curves[i].x, x0) == 0.0) exact = i;
  }
  if (exact) {
    weights[*exact] = 1.0;
  } else if (n == 1) {
    weights[0] = 1.0;
  } else {
    const auto m = static_cast<Eigen::Index>(n);
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(m + 1, m + 1);
    Eigen::VectorXd rhs(m + 1);
    for (Eigen::Index i = 0; i < m; ++i) {
      for (Eigen::Index j = 0; j < m; ++j) {
        a(i, j) = model(distance(curves[static_cast<std::size_t>(i)].x, curves[static_cast<std::size_t>(j)].x));
      }
      a(i, m) = 1.0;
      a(m, i) = 1.0;
      rhs(i) = model(distance(curves[static_cast<std::size_t>(i)].x, x0));
    }
    rhs(m) = 1.0;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
    if (!lu.isInvertible()) throw NumericalError("kriging: singular kriging system");
    const Eigen::VectorXd sol = lu.solve(rhs);
    for (Eigen::Index i = 0; i < m; ++i) weights[static_cast<std::size_t>(i)] = sol(i);
  }

  const auto& grid = curves.front().curve.grid();
  std::vector<double> values(grid.size(), 0.0);
  Support support{kInfinity, -kInfinity};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < grid.size(); ++j) values[j] += weights[i] * curves[i].curve.values()[j];
    if (weights[i] != 0.0 && !curves[i].curve.support().empty()) {
      support.start = std::min(support.start, curves[i].curve.support().start);
      support.end = std::max(support.end, curves[i].curve.support().end);
    }
  }
  if (support.start > support.end) support = Support{grid.front(), grid.front()};
  for (std::size_t j = 0; j < grid.size(); ++j) {
    if (!support.contains(grid[j])) values[j] = 0.0;
  }
  return KrigingResult{CadlagPath(grid, std::move(values), support, curves.front().curve.mode()), std::move(weights)};
}

std::pair<std::vector<Location>, double> midpoint_nodes(const Window& w, int resolution) {
  if (resolution < 1) throw ValidationError("quadrature: resolution must be positive");
  const std::size_t d = w.dimension();
  const std::size_t axes = d + (w.temporal() ? 1 : 0);
  std::vector<double> h;
  double volume = 1.0;
  for (std::size_t k = 0; k < d; ++k) h.push_back(w.side(k) / resolution);
  if (w.temporal()) h.push_back(w.horizon() / resolution);
  for (double e : h) volume *= e;
  std::size_t total = 1;
  for (std::size_t k = 0; k < axes; ++k) total *= static_cast<std::size_t>(resolution);
  std::vector<Location> nodes;
  nodes.reserve(total);
  const auto r = static_cast<std::size_t>(resolution);
  for (std::size_t idx = 0; idx < total; ++idx) {
    Location g;
    g.x.resize(d);
    std::size_t rest = idx;
    for (std::size_t k = axes; k-- > 0;) {
      const double v = (static_cast<double>(rest % r) + 0.5) * h[k];
      rest /= r;
      if (k < d) {
        g.x[k] = w.lower()[k] + v;
      } else {
        g.t = v;
      }
    }
    nodes.push_back(std::move(g));
  }
  return {std::move(nodes), volume};
}

namespace {

std::pair<double, double> mean_se(const std::vector<double>& v) {
  const double n = static_cast<double>(v.size());
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= n;
  if (v.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / (n - 1.0) / n)};
}

bool within(double residual, double se, double scale) {
  if (se > 0.0) return std::abs(residual) <= 3.0 * se;
  return std::abs(residual) <= 1e-12 * std::max(1.0, std::abs(scale));
}

}  // namespace

IdentityCheck campbell_check(const Simulator& simulate, const std::function<double(const MarkedPoint&)>& h,
                             const std::function<double(const Location&)>& rhs_integrand, const Window& window,
                             int replicates, RngSeed seed, int resolution) {
  if (replicates < 1) throw ValidationError("campbell: replicates must be >= 1");
  std::vector<double> sums;
  for (int r = 0; r < replicates; ++r) {
    const Configuration c = simulate(replicate_seed(seed, static_cast<std::uint64_t>(r)));
    double s = 0.0;
    for (const auto& p : c.points()) s += h(p);
    sums.push_back(s);
  }
  const auto [nodes, volume] = midpoint_nodes(window, resolution);
  double rhs = 0.0;
  for (const auto& g : nodes) rhs += rhs_integrand(g);
  rhs *= volume;
  if (!std::isfinite(rhs)) throw ValidationError("campbell: integrand not integrable on the window");

  IdentityCheck out;
  std::tie(out.lhs, out.lhs_se) = mean_se(sums);
  out.rhs = rhs;
  out.residual = out.lhs - out.rhs;
  out.residual_se = out.lhs_se;
  out.pass = within(out.residual, out.residual_se, out.rhs);
  return out;
}

IdentityCheck gnz_check(const Simulator& simulate,
                        const std::function<double(const MarkedPoint&, const Configuration&)>& papangelou,
                        const std::function<double(const MarkedPoint&, const Configuration&)>& h,
                        const Window& window, int replicates, RngSeed seed, int resolution,
                        const std::function<MarkedPoint(const Location&)>& lift) {
  if (replicates < 1) throw ValidationError("gnz: replicates must be >= 1");
  const auto [nodes, volume] = midpoint_nodes(window, resolution);
  std::vector<MarkedPoint> candidates;
  candidates.reserve(nodes.size());
  for (const auto& g : nodes) candidates.push_back(lift ? lift(g) : MarkedPoint{g, AuxMark{}, CadlagPath{}});

  std::vector<double> lhs, rhs, diff;
  for (int r = 0; r < replicates; ++r) {
    const Configuration c = simulate(replicate_seed(seed, static_cast<std::uint64_t>(r)));
    double s1 = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) s1 += h(c[i], c.without(i));
    double s2 = 0.0;
    for (const auto& y : candidates) {
      const double hv = h(y, c);
      if (hv != 0.0) s2 += hv * papangelou(y, c);
    }
    s2 *= volume;
    lhs.push_back(s1);
    rhs.push_back(s2);
    diff.push_back(s1 - s2);
  }
  IdentityCheck out;
  std::tie(out.lhs, out.lhs_se) = mean_se(lhs);
  std::tie(out.rhs, out.rhs_se) = mean_se(rhs);
  std::tie(out.residual, out.residual_se) = mean_se(diff);
  out.pass = within(out.residual, out.residual_se, out.rhs);
  return out;
}

}  // namespace cfmpp
