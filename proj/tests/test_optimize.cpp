#include <cmath>

#include "doctest.h"

#include "cfmpp/core.hpp"
#include "cfmpp/optimize.hpp"

using namespace cfmpp;

TEST_CASE("optimize a quadratic") {
  const auto r = optimize([](std::span<const double> t) { return (t[0] - 3.0) * (t[0] - 3.0); }, {0.0}, {-10.0},
                          {10.0});
  CHECK(r.converged);
  CHECK(std::abs(r.theta[0] - 3.0) < 1e-6);
  CHECK(r.scheme == "optimize");
}

TEST_CASE("constant objective returns the start") {
  const auto r = optimize([](std::span<const double>) { return 4.0; }, {0.7, -1.2}, {-5.0, -5.0}, {5.0, 5.0});
  CHECK(r.theta == std::vector<double>{0.7, -1.2});
  CHECK(r.objective == 4.0);
  CHECK(r.converged);
}

TEST_CASE("active bound") {
  const auto r = optimize([](std::span<const double> t) { return (t[0] - 3.0) * (t[0] - 3.0); }, {0.0}, {-10.0},
                          {2.0});
  CHECK(std::abs(r.theta[0] - 2.0) < 1e-6);
  CHECK(r.theta[0] <= 2.0);
}

TEST_CASE("rosenbrock") {
  auto f = [](std::span<const double> t) {
    return 100.0 * std::pow(t[1] - t[0] * t[0], 2) + std::pow(1.0 - t[0], 2);
  };
  const auto r = optimize(f, {-1.2, 1.0}, {-5.0, -5.0}, {5.0, 5.0});
  CHECK(r.converged);
  CHECK(std::abs(r.theta[0] - 1.0) < 1e-4);
  CHECK(std::abs(r.theta[1] - 1.0) < 1e-4);
  // deterministic
  CHECK(optimize(f, {-1.2, 1.0}, {-5.0, -5.0}, {5.0, 5.0}).theta == r.theta);
}

TEST_CASE("budget exhaustion and infinite regions") {
  auto f = [](std::span<const double> t) {
    return 100.0 * std::pow(t[1] - t[0] * t[0], 2) + std::pow(1.0 - t[0], 2);
  };
  OptimizeOptions tight;
  tight.max_evaluations = 10;
  const auto r = optimize(f, {-1.2, 1.0}, {-5.0, -5.0}, {5.0, 5.0}, tight);
  CHECK_FALSE(r.converged);
  CHECK(r.objective <= f(std::vector<double>{-1.2, 1.0}));

  // infinite values outside the feasible set are avoided
  auto g = [](std::span<const double> t) {
    return t[0] < 1.0 ? std::numeric_limits<double>::infinity() : (t[0] - 1.5) * (t[0] - 1.5);
  };
  const auto s = optimize(g, {3.0}, {0.0}, {5.0});
  CHECK(std::abs(s.theta[0] - 1.5) < 1e-6);
}

TEST_CASE("optimize argument checks") {
  auto f = [](std::span<const double> t) { return t[0] * t[0]; };
  CHECK_THROWS_AS(optimize(f, {0.0}, {1.0}, {0.0}), ValidationError);
  CHECK_THROWS_AS(optimize(f, {0.0}, {0.0, 0.0}, {1.0}), ValidationError);
  CHECK_THROWS_AS(optimize([](std::span<const double>) { return std::nan(""); }, {0.0}, {-1.0}, {1.0}),
                  ValidationError);
}
