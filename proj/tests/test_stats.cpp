#include <cmath>

#include "doctest.h"
#include "oracles.hpp"

#include "cfmpp/ground.hpp"
#include "cfmpp/marks.hpp"
#include "cfmpp/stats.hpp"

using namespace cfmpp;

namespace {

Configuration poisson_config(double rate, RngSeed seed, const Window& w = Window::unit_square()) {
  return Configuration(w, unmarked(simulate_poisson(HomogeneousPoisson{rate}, w, seed)));
}

Configuration with_wiener_marks(const Configuration& c, RngSeed seed) {
  std::vector<GroundPoint> pts;
  for (const auto& p : c.points()) pts.push_back({p.location, p.aux});
  const auto marks = attach_marks(pts, WienerMarks{1.0}, uniform_grid(1.0, 0.1), seed);
  std::vector<MarkedPoint> out;
  for (std::size_t i = 0; i < pts.size(); ++i) out.push_back({pts[i].location, pts[i].aux, marks[i]});
  return c.with_points(out);
}

FunctionalDatum curve(std::vector<double> x, const std::vector<double>& grid, const std::function<double(double)>& f) {
  return FunctionalDatum{std::move(x), CadlagPath::sample(grid, f, Support{}, Interpolation::Linear)};
}

}  // namespace

TEST_CASE("box intensity") {
  const Window w = Window::unit_square();
  const auto empty = intensity_box(Configuration(w), 4);
  for (double v : empty.values) CHECK(v == 0.0);
  const Configuration one(w, unmarked({Location{{0.1, 0.1}, std::nullopt}}));
  const auto s1 = intensity_box(one, 4);
  CHECK(s1.values[0] == 16.0);
  CHECK(std::count(s1.values.begin(), s1.values.end(), 0.0) == 15);
  std::vector<double> means;
  for (int r = 0; r < 300; ++r) {
    const Configuration c = poisson_config(100.0, replicate_seed(RngSeed{1}, r));
    const auto s = intensity_box(c, 5);
    CHECK(s.integral() == doctest::Approx(static_cast<double>(c.size())).epsilon(1e-12));
    means.push_back(s.integral());
  }
  const auto m = oracle::mean_se(means);
  CHECK(std::abs(m.mean - 100.0) <= 3.0 * m.se);

  const Window wt({0.0, 0.0}, {1.0, 1.0}, 4.0);
  const Configuration ct(wt, unmarked(simulate_poisson(HomogeneousPoisson{20.0}, wt, RngSeed{2})));
  const auto st = intensity_box(ct, 2, 4);
  CHECK(st.integral() == doctest::Approx(static_cast<double>(ct.size())));
}

TEST_CASE("kernel intensity") {
  std::vector<double> centre;
  for (int r = 0; r < 100; ++r) {
    const auto s = intensity_kernel(poisson_config(200.0, replicate_seed(RngSeed{3}, r)), 0.1, 16);
    double mean = 0.0;
    for (double v : s.values) mean += v / static_cast<double>(s.values.size());
    centre.push_back(mean);
  }
  const auto m = oracle::mean_se(centre);
  CHECK(std::abs(m.mean - 200.0) <= 3.0 * m.se);
  CHECK_THROWS_AS(intensity_kernel(poisson_config(10.0, RngSeed{1}), 0.0), ValidationError);
}

TEST_CASE("ground pair correlation") {
  // hard core: no pairs closer than R
  const Window w = Window::unit_square();
  const auto hc = simulate_gibbs(PairwiseGibbs{300.0, 0.0, 0.1, std::nullopt}, w, 8000, RngSeed{5});
  const auto g = pcf_ground(Configuration(w, unmarked(hc)), {0.02, 0.04, 0.06}, 0.02);
  for (double v : g.values) CHECK(v == 0.0);

  // a single pair
  const Configuration pair(w, unmarked({Location{{0.3, 0.5}, std::nullopt}, Location{{0.5, 0.5}, std::nullopt}}));
  const auto p = pcf_ground(pair, {0.1, 0.19, 0.2, 0.21, 0.3}, 0.02);
  CHECK(p.values[0] == 0.0);
  CHECK(p.values[4] == 0.0);
  CHECK(p.values[2] > 0.0);
  CHECK(p.values[2] >= p.values[1]);
  CHECK(p.edge_correction == "translation");

  CHECK_THROWS_AS(pcf_ground(Configuration(w, unmarked({Location{{0.3, 0.5}, std::nullopt}})), {0.1}),
                  ValidationError);

  // torus shift invariance
  const Window torus = Window::unit_square(std::nullopt, true);
  const Configuration c = poisson_config(150.0, RngSeed{8}, torus);
  const std::vector<double> lags{0.05, 0.1, 0.15};
  const std::vector<double> z{0.31, 0.77};
  const auto a = pcf_ground(c, lags);
  const auto b = pcf_ground(shift(c, z), lags);
  CHECK(a.edge_correction == "torus");
  for (std::size_t j = 0; j < lags.size(); ++j) CHECK(b.values[j] == doctest::Approx(a.values[j]).epsilon(1e-9));
}

TEST_CASE("mark-sampled pair correlation") {
  const SampleSchedule s({0.5, 1.0});
  const std::vector<double> lags{0.05, 0.1, 0.15};
  // one class reproduces the ground estimate exactly
  const Configuration c = with_wiener_marks(poisson_config(150.0, RngSeed{9}), RngSeed{10});
  const auto single = pcf_mark_sampled(c, s, [](const std::vector<double>&) { return 0; }, 1, lags, 0.03);
  CHECK(single.at({0, 0}).values == pcf_ground(c, lags, 0.03).values);

  // random labelling: sign classes follow the ground pcf
  std::vector<double> diff;
  for (int r = 0; r < 60; ++r) {
    const Configuration x = with_wiener_marks(poisson_config(200.0, replicate_seed(RngSeed{20}, r)),
                                              replicate_seed(RngSeed{900}, r));
    const auto est = pcf_mark_sampled(x, s, [](const std::vector<double>& u) { return u[1] > 0.0 ? 1 : 0; }, 2,
                                      lags, 0.03);
    const auto ground = pcf_ground(x, lags, 0.03);
    diff.push_back(est.at({0, 1}).values[1] - ground.values[1]);
  }
  const auto d = oracle::mean_se(diff);
  CHECK(std::abs(d.mean) <= 3.0 * d.se);

  // classes placed apart never pair at short range
  const Window w = Window::unit_square();
  std::vector<MarkedPoint> pts;
  const auto grid = uniform_grid(1.0, 0.5);
  for (int i = 0; i < 10; ++i) {
    const double y = 0.05 + 0.09 * i;
    pts.push_back({Location{{0.1, y}, std::nullopt}, AuxMark{}, CadlagPath::constant(grid, 0.0)});
    pts.push_back({Location{{0.9, y}, std::nullopt}, AuxMark{}, CadlagPath::constant(grid, 1.0)});
  }
  const Configuration split(w, pts);
  const auto cross = pcf_mark_sampled(split, SampleSchedule({0.5}),
                                      [](const std::vector<double>& u) { return u[0] > 0.5 ? 1 : 0; }, 2,
                                      {0.05, 0.1, 0.2}, 0.03);
  for (double v : cross.at({0, 1}).values) CHECK(v == 0.0);
  CHECK(cross.at({0, 0}).values[1] > 0.0);
  CHECK_THROWS_AS(pcf_mark_sampled(split, SampleSchedule({-0.5}),
                                   [](const std::vector<double>&) { return 0; }, 1, {0.1}),
                  ValidationError);
}

TEST_CASE("trace variogram") {
  const auto grid = uniform_grid(2.0, 0.1);
  std::vector<FunctionalDatum> same;
  for (int i = 0; i < 6; ++i) same.push_back(curve({0.1 * i, 0.5}, grid, [](double t) { return std::sin(t); }));
  for (double v : trace_variogram(same, 0.2).gamma) CHECK(v == 0.0);

  // two curves differing by a constant c
  const double c = 0.7;
  const std::vector<FunctionalDatum> two{curve({0.0, 0.0}, grid, [](double t) { return t * t; }),
                                         curve({0.3, 0.4}, grid, [c](double t) { return t * t + c; })};
  const auto e = trace_variogram(two, 1.0);
  CHECK(e.counts[0] == 1);
  CHECK(e.gamma[0] == doctest::Approx(0.5 * c * c * 2.0));
  CHECK(half_squared_distance(two[0].curve, two[1].curve) == doctest::Approx(0.5 * c * c * 2.0));

  // order symmetry and invariance under adding a common path
  Rng rng = make_rng(RngSeed{2});
  std::normal_distribution<double> z(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<FunctionalDatum> data;
  for (int i = 0; i < 25; ++i) {
    const double a = z(rng), b = z(rng);
    data.push_back(curve({u(rng), u(rng)}, grid, [a, b](double t) { return a + b * t; }));
  }
  const auto base = trace_variogram(data, 0.1);
  auto reversed = data;
  std::reverse(reversed.begin(), reversed.end());
  const auto rev = trace_variogram(reversed, 0.1);
  auto shifted = data;
  for (auto& d : shifted) {
    std::vector<double> v = d.curve.values();
    for (std::size_t j = 0; j < v.size(); ++j) v[j] += std::cos(3.0 * grid[j]);
    d.curve = CadlagPath(grid, v, Support{}, Interpolation::Linear);
  }
  const auto sh = trace_variogram(shifted, 0.1);
  for (std::size_t b = 0; b < base.gamma.size(); ++b) {
    CHECK(rev.counts[b] == base.counts[b]);
    CHECK(rev.gamma[b] == doctest::Approx(base.gamma[b]).epsilon(1e-12));
    CHECK(sh.gamma[b] == doctest::Approx(base.gamma[b]).epsilon(1e-9));
  }
  CHECK_THROWS_AS(trace_variogram({data[0]}), ValidationError);
}

TEST_CASE("variogram model fit") {
  VariogramModel truth{VariogramModel::Family::Exponential, 0.1, 2.0, 0.3};
  CHECK(truth(0.0) == 0.0);
  VariogramEstimate e;
  for (int b = 0; b < 12; ++b) {
    e.edges.push_back(0.05 * b);
    e.centers.push_back(0.05 * b + 0.025);
    e.gamma.push_back(truth(0.05 * b + 0.025));
    e.counts.push_back(10 + b);
  }
  e.edges.push_back(0.6);
  const auto fit = fit_variogram(e, VariogramModel::Family::Exponential);
  CHECK(fit.nugget == doctest::Approx(0.1).epsilon(1e-3));
  CHECK(fit.partial_sill == doctest::Approx(2.0).epsilon(1e-3));
  CHECK(fit.range == doctest::Approx(0.3).epsilon(1e-3));
  const VariogramModel sph{VariogramModel::Family::Spherical, 0.0, 1.0, 0.5};
  CHECK(sph(0.5) == doctest::Approx(1.0));
  CHECK(sph(0.9) == doctest::Approx(1.0));
}

TEST_CASE("kriging") {
  const auto grid = uniform_grid(1.0, 0.1);
  const VariogramModel model{VariogramModel::Family::Exponential, 0.0, 1.0, 0.2};
  const std::vector<FunctionalDatum> single{curve({0.5, 0.5}, grid, [](double t) { return 3.0 * t; })};
  const auto one = kriging_predict(single, {0.1, 0.9}, model);
  CHECK(one.weights == std::vector<double>{1.0});
  CHECK(one.prediction.values() == single[0].curve.values());

  std::vector<FunctionalDatum> data;
  Rng rng = make_rng(RngSeed{7});
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 12; ++i) {
    const double a = u(rng);
    data.push_back(curve({u(rng), u(rng)}, grid, [a](double t) { return a * std::sin(4.0 * t); }));
  }
  const auto at_site = kriging_predict(data, data[4].x, model);
  CHECK(uniform_distance(at_site.prediction, data[4].curve) == 0.0);
  const auto off = kriging_predict(data, {0.37, 0.61}, model);
  double total = 0.0;
  for (double w : off.weights) total += w;
  CHECK(std::abs(total - 1.0) < 1e-10);

  const std::vector<FunctionalDatum> sym{curve({0.2, 0.5}, grid, [](double t) { return t; }),
                                         curve({0.8, 0.5}, grid, [](double t) { return -t; })};
  const auto mid = kriging_predict(sym, {0.5, 0.5}, model);
  CHECK(mid.weights[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(mid.weights[1] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("campbell check") {
  const Window w = Window::unit_square();
  const double lambda = 80.0;
  const Simulator sim = [&](RngSeed s) { return poisson_config(lambda, s); };
  auto in_box = [](const Location& g) { return g.x[0] < 0.5 && g.x[1] < 0.4; };
  const auto c = campbell_check(
      sim, [&](const MarkedPoint& y) { return in_box(y.location) ? 1.0 : 0.0; },
      [&](const Location& g) { return in_box(g) ? lambda : 0.0; }, w, 400, RngSeed{1}, 40);
  CHECK(c.rhs == doctest::Approx(lambda * 0.2));
  CHECK(c.pass);

  const auto zero = campbell_check(
      sim, [](const MarkedPoint&) { return 0.0; }, [](const Location&) { return 0.0; }, w, 20, RngSeed{1});
  CHECK(zero.lhs == 0.0);
  CHECK(zero.rhs == 0.0);

  // location x mark-bin indicator under random labelling: the rhs factorizes
  const Simulator marked = [&](RngSeed s) { return with_wiener_marks(poisson_config(lambda, s), derive_seed(s, 1)); };
  const auto f = campbell_check(
      marked, [&](const MarkedPoint& y) { return in_box(y.location) && y.mark(1.0) > 0.0 ? 1.0 : 0.0; },
      [&](const Location& g) { return in_box(g) ? 0.5 * lambda : 0.0; }, w, 400, RngSeed{2}, 40);
  CHECK(f.pass);
}

TEST_CASE("gnz check") {
  const Window w = Window::unit_square();
  const double lambda = 60.0;
  const Simulator sim = [&](RngSeed s) { return poisson_config(lambda, s); };
  auto in_box = [](const Location& g) { return g.x[0] < 0.5; };
  const auto h = [&](const MarkedPoint& y, const Configuration&) { return in_box(y.location) ? 1.0 : 0.0; };
  const auto ok = gnz_check(sim, [&](const MarkedPoint&, const Configuration&) { return lambda; }, h, w, 400,
                            RngSeed{3});
  CHECK(ok.pass);
  const auto wrong = gnz_check(sim, [&](const MarkedPoint&, const Configuration&) { return 0.5 * lambda; }, h, w,
                               400, RngSeed{3});
  CHECK_FALSE(wrong.pass);
  CHECK(wrong.residual == doctest::Approx(0.5 * lambda * 0.5).epsilon(0.1));
  const auto none = gnz_check(
      sim, [&](const MarkedPoint&, const Configuration&) { return lambda; },
      [](const MarkedPoint&, const Configuration&) { return 0.0; }, w, 50, RngSeed{3});
  CHECK(none.residual == 0.0);
}
