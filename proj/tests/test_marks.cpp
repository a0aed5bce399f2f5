#include <cmath>
#include <numbers>

#include "doctest.h"
#include "oracles.hpp"

#include "cfmpp/marks.hpp"

using namespace cfmpp;

namespace {

double phi(double x, double mean, double var) {
  return std::exp(-0.5 * (x - mean) * (x - mean) / var) / std::sqrt(2.0 * std::numbers::pi * var);
}

std::vector<GroundPoint> spatial_points(const std::vector<std::vector<double>>& xs) {
  std::vector<GroundPoint> out;
  for (const auto& x : xs) out.push_back({Location{x, std::nullopt}, AuxMark{}});
  return out;
}

void check_zero_outside_support(const std::vector<CadlagPath>& marks) {
  for (const auto& m : marks) {
    for (std::size_t j = 0; j < m.size(); ++j) {
      if (!m.support().contains(m.grid()[j])) CHECK(m.values()[j] == 0.0);
    }
  }
}

}  // namespace

TEST_CASE("deterministic constant marks") {
  const auto grid = uniform_grid(1.0, 0.1);
  const auto pts = spatial_points({{0.1, 0.2}, {0.5, 0.5}, {0.9, 0.1}});
  const DeterministicMarks model{[](const Location&, const AuxMark&, double) { return 2.5; }};
  const auto marks = attach_marks(pts, model, grid, RngSeed{1});
  for (const auto& m : marks) {
    for (double v : m.values()) CHECK(v == 2.5);
  }
  const DeterministicMarks ramp{[](const Location& g, const AuxMark&, double t) { return g.x[0] * t; }};
  const auto r = attach_marks(pts, ramp, grid, RngSeed{1});
  CHECK(r[2](0.5) == 0.9 * 0.5);
}

TEST_CASE("wiener marks") {
  const auto grid = uniform_grid(1.0, 0.05);
  const auto pts = spatial_points({{0.2, 0.2}, {0.7, 0.7}});
  const double sigma = 0.7;
  std::vector<double> sq, a, b, prod;
  for (int r = 0; r < 2000; ++r) {
    const auto m = attach_marks(pts, WienerMarks{sigma}, grid, replicate_seed(RngSeed{40}, r));
    CHECK(m[0](0.0) == 0.0);
    CHECK(m[1](0.0) == 0.0);
    sq.push_back(m[0](0.6) * m[0](0.6));
    a.push_back(m[0](1.0));
    b.push_back(m[1](1.0));
    prod.push_back(m[0](1.0) * m[1](1.0));
    check_zero_outside_support(m);
  }
  const auto v = oracle::mean_se(sq);
  CHECK(std::abs(v.mean - sigma * sigma * 0.6) <= 3.0 * v.se);
  // random labelling: marks at distinct points are uncorrelated
  const auto c = oracle::mean_se(prod);
  CHECK(std::abs(c.mean) <= 3.0 * c.se);
  // stationary construction: the same marginal law at two locations
  const auto [d, crit] = oracle::ks_two_sample(a, b);
  CHECK(d < crit);
}

TEST_CASE("growth-interaction: linear growth closed form (RK4)") {
  GrowthInteraction gi;
  const double a = 0.8, b = 2.0;
  gi.growth = growth_function("linear", {a, b});
  const std::vector<GrowthPoint> pts{{Location{{0.2, 0.2}, 0.0}, kInfinity},
                                     {Location{{0.6, 0.6}, 1.2345}, 2.0}};
  const auto marks = gi_integrate(pts, gi, 1e-3, 5.0, RngSeed{1});
  double err = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double birth = *pts[i].location.t;
    for (std::size_t j = 0; j < marks[i].size(); ++j) {
      const double t = marks[i].grid()[j];
      const double exact = marks[i].support().contains(t) ? oracle::linear_growth(a, b, t - birth) : 0.0;
      err = std::max(err, std::abs(marks[i].values()[j] - exact));
    }
  }
  CHECK(err < 1e-6);
  CHECK(marks[1].support().start == 1.2345);
  CHECK(marks[1].support().end == 1.2345 + 2.0);
  check_zero_outside_support(marks);
  // deterministic integration is bitwise reproducible
  CHECK(gi_integrate(pts, gi, 1e-3, 5.0, RngSeed{99}) == marks);
}

TEST_CASE("growth-interaction: symmetric pair") {
  GrowthInteraction gi;
  gi.growth = growth_function("logistic", {1.0, 1.0});
  gi.interaction = interaction_function("distance_decay", {0.5, 0.2});
  gi.initial = 0.1;
  const std::vector<GrowthPoint> pts{{Location{{0.4, 0.5}, 0.5}, kInfinity}, {Location{{0.6, 0.5}, 0.5}, kInfinity}};
  const auto marks = gi_integrate(pts, gi, 0.01, 3.0, RngSeed{1});
  CHECK(marks[0].values() == marks[1].values());
  // the interaction slows growth relative to a lone point
  const auto lone = gi_integrate({pts[0]}, gi, 0.01, 3.0, RngSeed{1});
  CHECK(marks[0](3.0 - 1e-9) < lone[0](3.0 - 1e-9));
}

TEST_CASE("growth-interaction: pure noise is brownian") {
  GrowthInteraction gi;
  gi.growth = growth_function("linear", {0.0, 0.0});
  gi.noise = noise_function("constant", {0.3});
  gi.initial = 5.0;
  const double birth = 0.25, s = 0.5;
  std::vector<double> sq;
  for (int r = 0; r < 3000; ++r) {
    const auto m = gi_integrate({{Location{{0.5}, birth}, kInfinity}}, gi, 0.01, 1.0, replicate_seed(RngSeed{8}, r));
    sq.push_back((m[0](birth + s) - 5.0) * (m[0](birth + s) - 5.0));
  }
  const auto v = oracle::mean_se(sq);
  CHECK(std::abs(v.mean - 0.09 * s) <= 3.0 * v.se);
}

TEST_CASE("growth-interaction: negative mark policies") {
  GrowthInteraction gi;
  gi.growth = [](double) { return -1.0; };
  gi.initial = 0.5;
  const std::vector<GrowthPoint> pts{{Location{{0.5}, 0.0}, kInfinity}};
  const auto clamped = gi_integrate(pts, gi, 0.1, 2.0, RngSeed{1});
  CHECK(clamped[0](1.5) == 0.0);
  CHECK(clamped[0].support().contains(1.5));
  gi.policy = NegativeMarkPolicy::Absorb;
  CHECK(gi_integrate(pts, gi, 0.1, 2.0, RngSeed{1})[0](1.9) == 0.0);
  gi.policy = NegativeMarkPolicy::Error;
  CHECK_THROWS_AS(gi_integrate(pts, gi, 0.1, 2.0, RngSeed{1}), NumericalError);
}

TEST_CASE("registry") {
  CHECK(growth_function("linear", {2.0, 3.0})(1.0) == 4.0);
  CHECK(growth_function("logistic", {2.0, 4.0})(2.0) == 2.0);
  CHECK(interaction_function("disk_overlap", {2.0})(0.5, 0.3, 0.4) == doctest::Approx(0.4));
  CHECK_FALSE(static_cast<bool>(interaction_function("none", {})));
  CHECK(noise_function("proportional", {0.5})(-2.0) == 1.0);
  CHECK_THROWS_AS(growth_function("cubic", {1.0}), ValidationError);
  CHECK_THROWS_AS(growth_function("linear", {1.0}), ValidationError);
  CHECK_THROWS_AS(interaction_function("magnet", {}), ValidationError);
}

TEST_CASE("geostatistical marks") {
  const auto grid = uniform_grid(1.0, 0.5);
  GeostatisticalMarks flat;
  GaussianField f0;
  f0.kernel.variance = 0.0;
  f0.mean = [](const Location& g) { return g.x[0] + (g.t ? *g.t : 0.0); };
  flat.fields.push_back(f0);
  const auto pts = spatial_points({{0.1, 0.1}, {0.3, 0.8}});
  const auto det = attach_marks(pts, flat, grid, RngSeed{1});
  CHECK(det[1](0.5) == doctest::Approx(0.8));

  GeostatisticalMarks field;
  GaussianField f;
  f.kernel.variance = 2.0;
  f.kernel.spatial_scale = 0.25;
  f.kernel.temporal_scale = 2.0;
  field.fields.push_back(f);
  const auto close = spatial_points({{0.5, 0.5}, {0.5 + 1e-6, 0.5}});
  const auto lagged = spatial_points({{0.2, 0.5}, {0.45, 0.5}});
  std::vector<double> x0, x1, cs, ct;
  for (int r = 0; r < 3000; ++r) {
    const auto m = attach_marks(close, field, grid, replicate_seed(RngSeed{60}, r));
    x0.push_back(m[0](0.0));
    x1.push_back(m[1](0.0));
    const auto l = attach_marks(lagged, field, grid, replicate_seed(RngSeed{9060}, r));
    cs.push_back(l[0](0.0) * l[1](0.0));
    ct.push_back(l[0](0.0) * l[0](1.0));
  }
  const auto sa = oracle::mean_se(x0), sb = oracle::mean_se(x1);
  double cov = 0.0;
  for (std::size_t i = 0; i < x0.size(); ++i) cov += (x0[i] - sa.mean) * (x1[i] - sb.mean);
  cov /= static_cast<double>(x0.size() - 1);
  CHECK(cov / (sa.sd * sb.sd) > 0.999);
  const auto cspatial = oracle::mean_se(cs), ctemporal = oracle::mean_se(ct);
  CHECK(std::abs(cspatial.mean - 2.0 * std::exp(-1.0)) <= 3.0 * cspatial.se);
  CHECK(std::abs(ctemporal.mean - 2.0 * std::exp(-0.5)) <= 3.0 * ctemporal.se);

  // two fields selected by the aux type
  GeostatisticalMarks two;
  two.fields = {f0, f0};
  two.fields[1].mean = [](const Location&) { return -7.0; };
  std::vector<GroundPoint> typed{{Location{{0.1, 0.1}, std::nullopt}, AuxMark::discrete(2)},
                                 {Location{{0.2, 0.2}, std::nullopt}, AuxMark::discrete(1)}};
  const auto tm = attach_marks(typed, two, grid, RngSeed{1});
  CHECK(tm[0](0.0) == -7.0);
  CHECK(tm[1](0.0) == doctest::Approx(0.2));
}

TEST_CASE("intensity-dependent marks") {
  const Window w = Window::unit_square();
  FieldGrid grid(w, 4, 1);
  for (auto& v : grid.values()) v = 3.0;
  const std::vector<Location> pts{{{0.1, 0.1}, std::nullopt}, {{0.2, 0.15}, std::nullopt}, {{0.9, 0.9}, std::nullopt}};
  const auto times = uniform_grid(1.0, 0.5);
  const auto m = intensity_dependent_marking(grid, pts, times);
  for (const auto& p : m) CHECK(p(0.5) == 3.0);
  grid.values()[grid.cell_of(pts[2].x, std::nullopt)] = 9.0;
  const auto m2 = intensity_dependent_marking(grid, pts, times);
  CHECK(m2[0].values() == m2[1].values());
  CHECK(m2[2](0.0) == 9.0);
  CHECK_THROWS_AS(intensity_dependent_marking(grid, {{{1.5, 0.5}, std::nullopt}}, times), ValidationError);

  // marks and local counts are positively associated under Cox clustering
  LogGaussianCox cox;
  cox.kernel.variance = 1.0;
  cox.kernel.spatial_scale = 0.3;
  cox.mean = [](const Location&) { return std::log(30.0); };
  cox.resolution = 4;
  std::vector<double> level, count;
  for (int r = 0; r < 300; ++r) {
    const auto real = simulate_lgcp(cox, w, replicate_seed(RngSeed{70}, r));
    if (real.points.empty()) continue;
    const auto marks = intensity_dependent_marking(real.intensity, real.points, times);
    std::vector<int> per_cell(real.intensity.cell_count(), 0);
    for (const auto& p : real.points) ++per_cell[real.intensity.cell_of(p.x, std::nullopt)];
    for (std::size_t i = 0; i < marks.size(); ++i) {
      level.push_back(marks[i](0.0));
      count.push_back(per_cell[real.intensity.cell_of(real.points[i].x, std::nullopt)]);
    }
  }
  const auto ml = oracle::mean_se(level), mc = oracle::mean_se(count);
  double cov = 0.0;
  for (std::size_t i = 0; i < level.size(); ++i) cov += (level[i] - ml.mean) * (count[i] - mc.mean);
  CHECK(cov > 0.0);
}

TEST_CASE("fidi densities") {
  const auto bm = FidiDensitySpec::brownian(1.0);
  const SampleSchedule two({1.0, 2.0});
  CHECK(fidi_density_eval(bm, two, std::vector<double>{0.0, 0.0}).value ==
        doctest::Approx(phi(0.0, 0.0, 1.0) * phi(0.0, 0.0, 1.0)));
  const SampleSchedule one({0.7});
  CHECK(fidi_density_eval(bm, one, std::vector<double>{0.3}).value == doctest::Approx(phi(0.3, 0.0, 0.7)));
  const auto det = fidi_density_eval(FidiDensitySpec::deterministic(), two, std::vector<double>{1.0, 2.0});
  CHECK(det.degenerate);
  CHECK(std::isinf(det.value));

  // integrates to 1 over a truncated grid
  const auto bs = FidiDensitySpec::brownian(0.5);
  const double h = 0.02;
  double total = 0.0;
  for (double u1 = -4.0; u1 <= 4.0; u1 += h) {
    for (double u2 = -4.0; u2 <= 4.0; u2 += h) {
      total += fidi_density_eval(bs, two, std::vector<double>{u1, u2}).value * h * h;
    }
  }
  CHECK(std::abs(total - 1.0) < 1e-3);

  // matrix form is the product over points
  const std::vector<std::vector<double>> rows{{0.1, 0.3}, {-0.2, 0.0}};
  CHECK(fidi_density_eval(bm, two, rows).value ==
        doctest::Approx(fidi_density_eval(bm, two, rows[0]).value * fidi_density_eval(bm, two, rows[1]).value));
  CHECK_THROWS_AS(fidi_density_eval(bm, SampleSchedule({0.0}), std::vector<double>{0.0}), ValidationError);
}

TEST_CASE("aux densities") {
  const Location g{{0.5, 0.5}, std::nullopt};
  const auto two = AuxDensitySpec::uniform_types(2);
  CHECK(aux_density_eval(two, g, AuxMark::discrete(1)) == 0.5);
  CHECK(aux_density_eval(two, {g, g, g}, {AuxMark::discrete(1), AuxMark::discrete(2), AuxMark::discrete(2)}) ==
        doctest::Approx(0.125));
  CHECK_THROWS_AS(aux_density_eval(two, g, AuxMark::discrete(3)), ValidationError);

  auto tilted = AuxDensitySpec::uniform_types(2);
  tilted.type_probabilities = [](const Location& x) { return std::vector<double>{x.x[0], 1.0 - x.x[0]}; };
  const Location h{{0.2, 0.5}, std::nullopt};
  CHECK(aux_density_eval(tilted, h, AuxMark::discrete(2)) == doctest::Approx(0.8));
  CHECK(aux_density_eval(tilted, {g, h}, {AuxMark::discrete(1), AuxMark::discrete(2)}) ==
        doctest::Approx(aux_density_eval(tilted, g, AuxMark::discrete(1)) *
                        aux_density_eval(tilted, h, AuxMark::discrete(2))));

  const double mu = 1.7, l = 0.4;
  CHECK(aux_density_eval(AuxDensitySpec::exponential(mu), g, AuxMark::real({l})) ==
        doctest::Approx(mu * std::exp(-mu * l)));
  // with respect to the unit exponential reference the density picks up e^{l}
  CHECK(aux_density_eval(AuxDensitySpec::exponential(mu, AuxReference::Kind::UnitExponential), g,
                         AuxMark::real({l})) == doctest::Approx(mu * std::exp(-mu * l) * std::exp(l)));
}
