#include "cfmpp/geometry.hpp"

#include <cmath>
#include <numbers>

namespace cfmpp {

BooleanSection section(const Configuration& c, double t) {
  const Window& w = c.window();
  if (w.dimension() != 2) throw ValidationError("section: window must be planar");
  if (t < 0.0 || (w.temporal() && t > w.horizon())) throw ValidationError("section: time outside [0, T*]");
  BooleanSection s{t, {}};
  for (const auto& p : c.points()) {
    if (!p.mark.support().contains(t)) continue;
    const double r = p.mark(t);
    if (r > 0.0) s.disks.push_back(Disk{{p.location.x[0], p.location.x[1]}, r});
  }
  return s;
}

double coverage_fraction(const BooleanSection& s, const Window& w, int resolution) {
  if (w.dimension() != 2) throw ValidationError("coverage: window must be planar");
  if (resolution < 32) throw ValidationError("coverage: resolution must be at least 32");
  if (s.disks.empty()) return 0.0;
  const auto n = static_cast<std::size_t>(resolution);
  const double hx = w.side(0) / resolution;
  const double hy = w.side(1) / resolution;
  std::vector<char> covered(n * n, 0);

  for (const auto& d : s.disks) {
    const double r2 = d.radius * d.radius;
    // Pixel index range whose centres may fall inside the disk.
    const auto lo_i = static_cast<long>(std::floor((d.center[0] - d.radius - w.lower()[0]) / hx - 0.5));
    const auto hi_i = static_cast<long>(std::ceil((d.center[0] + d.radius - w.lower()[0]) / hx - 0.5));
    const auto lo_j = static_cast<long>(std::floor((d.center[1] - d.radius - w.lower()[1]) / hy - 0.5));
    const auto hi_j = static_cast<long>(std::ceil((d.center[1] + d.radius - w.lower()[1]) / hy - 0.5));
    for (long i = lo_i; i <= hi_i; ++i) {
      const double dx = w.lower()[0] + (static_cast<double>(i) + 0.5) * hx - d.center[0];
      long ii = i;
      if (w.torus()) {
        ii = ((i % resolution) + resolution) % resolution;
      } else if (i < 0 || i >= resolution) {
        continue;
      }
      for (long j = lo_j; j <= hi_j; ++j) {
        const double dy = w.lower()[1] + (static_cast<double>(j) + 0.5) * hy - d.center[1];
        if (dx * dx + dy * dy > r2) continue;
        long jj = j;
        if (w.torus()) {
          jj = ((j % resolution) + resolution) % resolution;
        } else if (j < 0 || j >= resolution) {
          continue;
        }
        covered[static_cast<std::size_t>(ii) * n + static_cast<std::size_t>(jj)] = 1;
      }
    }
  }
  std::size_t count = 0;
  for (char c : covered) count += static_cast<std::size_t>(c);
  return static_cast<double>(count) / static_cast<double>(n * n);
}

double expected_coverage(const std::vector<double>& count_pmf,
                         const std::function<double(std::size_t, std::size_t)>& second_moment,
                         const Window& w) {
  double mass = 0.0;
  double total = 0.0;
  for (std::size_t n = 0; n < count_pmf.size(); ++n) {
    const double p = count_pmf[n];
    if (!(p >= 0.0)) throw ValidationError("expected coverage: negative probability");
    mass += p;
    if (p == 0.0) continue;
    double sum = 0.0;
    for (std::size_t i = 1; i <= n; ++i) sum += second_moment(i, n);
    total += p * sum;
  }
  if (!(1.0 - mass < 1e-8)) throw ValidationError("expected coverage: truncation tail mass too heavy");
  return std::numbers::pi * total / w.spatial_volume();
}

double expected_coverage_poisson(double mean, double m2, const Window& w) {
  if (!(mean >= 0.0) || !std::isfinite(mean)) throw ValidationError("expected coverage: bad Poisson mean");
  std::vector<double> pmf;
  double p = std::exp(-mean);
  double mass = 0.0;
  for (std::size_t n = 0; 1.0 - mass >= 1e-12 || static_cast<double>(n) <= mean; ++n) {
    if (n > 0) p *= mean / static_cast<double>(n);
    pmf.push_back(p);
    mass += p;
    if (n > 100000) break;
  }
  return expected_coverage(pmf, [m2](std::size_t, std::size_t) { return m2; }, w);
}

}  // namespace cfmpp
