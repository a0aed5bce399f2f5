#ifndef CFMPP_GEOMETRY_HPP
#define CFMPP_GEOMETRY_HPP

#include <array>
#include <cstddef>
#include <functional>
#include <vector>

#include "cfmpp/core.hpp"

namespace cfmpp {

struct Disk {
  std::array<double, 2> center{};
  double radius = 0.0;
};

/// Xi(t): union of the disks B[X_i, M_i(t)] over points alive at t.
struct BooleanSection {
  double t = 0.0;
  std::vector<Disk> disks;
};

/// One disk per point whose support contains t and whose mark is positive.
BooleanSection section(const Configuration& c, double t);

/// Pixel-count estimate of |Xi(t) ∩ W| / |W| on a resolution x resolution
/// raster (pixel centres). Disks wrap around on a torus window.
double coverage_fraction(const BooleanSection& s, const Window& w, int resolution = 256);

/// pi / |X| * sum_n P(N = n) sum_{i <= n} E[M_i(t)^2] for non-overlapping disks.
/// `count_pmf[n]` is P(N = n); the missing tail mass must stay below 1e-8.
double expected_coverage(const std::vector<double>& count_pmf,
                         const std::function<double(std::size_t i, std::size_t n)>& second_moment,
                         const Window& w);

/// N ~ Poisson(mean) with i.i.d. radii of second moment m2.
double expected_coverage_poisson(double mean, double m2, const Window& w);

}  // namespace cfmpp

#endif  // CFMPP_GEOMETRY_HPP
