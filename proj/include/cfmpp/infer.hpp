#ifndef CFMPP_INFER_HPP
#define CFMPP_INFER_HPP

#include <functional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "cfmpp/core.hpp"
#include "cfmpp/ground.hpp"
#include "cfmpp/marks.hpp"
#include "cfmpp/optimize.hpp"
#include "cfmpp/random.hpp"

namespace cfmpp {

/// lambda*_G(t): constant rho (a) or exp(a + b t).
struct TemporalRate {
  enum class Family { Constant, LogLinear };
  Family family = Family::Constant;
  double a = 1.0;
  double b = 0.0;

  double operator()(double t) const;
};

/// Spatial density f^{G,S}(x) on the window: uniform, or proportional to
/// exp(coef . x) (normalized in closed form on the box).
struct SpatialDensity {
  enum class Family { Uniform, LogLinear };
  Family family = Family::Uniform;
  std::vector<double> coef;

  double operator()(std::span<const double> x, const Window& w) const;
};

/// Temporally grounded Poisson ground process with conditional intensity
/// f^{G,S}(x) lambda*_G(t).
struct TemporalPoisson {
  TemporalRate rate;
  SpatialDensity spatial;
};

using GroundSpec = std::variant<HomogeneousPoisson, InhomogeneousPoisson, PairwiseGibbs, TemporalPoisson>;

struct ParametricModel {
  GroundSpec ground;
  AuxDensitySpec aux = AuxDensitySpec::uniform_types(1);
  FidiDensitySpec marks = FidiDensitySpec::deterministic();
};

/// theta -> model with box bounds.
struct ParameterMap {
  std::vector<std::string> names;
  std::vector<double> lower;
  std::vector<double> upper;
  std::function<ParametricModel(std::span<const double>)> build;

  void validate() const;
};

/// A point with its marks sampled at S_k.
struct SampledPoint {
  Location location;
  AuxMark aux;
  std::vector<double> u;
};

std::vector<SampledPoint> sampled_points(const Configuration& c, const SampleSchedule& schedule);

/// lambda_G(g); throws for models without a closed-form intensity.
double ground_intensity(const GroundSpec& ground, const Location& g, const Window& w);
/// mu_G(W) by tensor midpoint quadrature (closed form where available).
double ground_mass(const GroundSpec& ground, const Window& w, int resolution = 64);

/// f^{s_1..s_k}(u) f^A(l) lambda_G(g); the mark factor is dropped for degenerate mark laws.
double intensity_functional(const ParametricModel& model, const SampledPoint& y, const SampleSchedule& schedule,
                            const Window& w);

/// Temporally grounded conditional intensity. `history` must be sorted by time;
/// only events strictly before y's time are used.
double conditional_intensity(const ParametricModel& model, const std::vector<SampledPoint>& history,
                             const SampledPoint& y, const SampleSchedule& schedule, const Window& w);

/// sum_i log lambda*(y_i) - int int f^{G,S}(x) lambda*_G(t) dx dt.
double loglik_temporal(const ParametricModel& model, const std::vector<SampledPoint>& data, const Window& w,
                       const SampleSchedule& schedule, int resolution = 64);

struct JanossyValue {
  double value = 0.0;
  bool normalized = true;  ///< false for Gibbs models (unknown normalizing constant)
};

JanossyValue janossy_density(const ParametricModel& model, const std::vector<SampledPoint>& points,
                             const Window& w, const SampleSchedule& schedule, int resolution = 64);
/// log of janossy_density without under/overflow.
JanossyValue log_janossy_density(const ParametricModel& model, const std::vector<SampledPoint>& points,
                                 const Window& w, const SampleSchedule& schedule, int resolution = 64);

/// sum_{n <= n_max} J_n(Y^n) / n! for finite Poisson models (marks and aux
/// integrate to 1; the ground integrals use midpoint quadrature).
double janossy_normalization(const ParametricModel& model, const Window& w, int n_max = 30, int resolution = 64);

/// Density of the model with respect to a reference Poisson model:
///   exp(mu*_G(W) - mu_G(W)) prod_i lambda(y_i) / lambda*(y_i).
double density_wrt_poisson(const ParametricModel& model, const std::vector<SampledPoint>& points,
                           const ParametricModel& reference, const Window& w, const SampleSchedule& schedule,
                           int resolution = 64);

/// lambda(y; phi) = p(phi + y) / p(phi); zero when y's location is in phi.
double papangelou(const ParametricModel& model, const SampledPoint& y, const std::vector<SampledPoint>& phi,
                  const Window& w, const SampleSchedule& schedule);

/// sum_i log lambda(y_i; data \ y_i) - int lambda_G(g; data) dg, with the aux
/// and mark factors integrating to 1 in the compensator term.
double pseudolikelihood(const ParametricModel& model, const std::vector<SampledPoint>& data, const Window& w,
                        const SampleSchedule& schedule, int resolution = 64);

FitResult fit_mle_temporal(const ParameterMap& map, const std::vector<SampledPoint>& data, const Window& w,
                           const SampleSchedule& schedule, std::vector<double> theta0,
                           const OptimizeOptions& options = {}, int resolution = 64);
FitResult fit_mle_janossy(const ParameterMap& map, const std::vector<SampledPoint>& data, const Window& w,
                          const SampleSchedule& schedule, std::vector<double> theta0,
                          const OptimizeOptions& options = {}, int resolution = 64);
FitResult fit_pseudolikelihood(const ParameterMap& map, const std::vector<SampledPoint>& data, const Window& w,
                               const SampleSchedule& schedule, std::vector<double> theta0,
                               const OptimizeOptions& options = {}, int resolution = 64);

/// Growth-interaction family f_i(t; theta, n) for the least-squares scheme.
struct GrowthFamily {
  std::vector<std::string> names;
  std::vector<double> lower;
  std::vector<double> upper;
  std::function<GrowthInteraction(std::span<const double>)> build;
  double step = 0.01;
};

enum class EdgeCorrection { None, TorusSimulation };

struct LeastSquaresOptions {
  EdgeCorrection edge_correction = EdgeCorrection::None;
  int correction_rounds = 1;
  double margin = 0.1;  ///< torus padding as a fraction of the largest side
  RngSeed seed{};
  OptimizeOptions optimize;
};

/// argmin_theta sum_j sum_i (u_ij - f_i(s_j; theta, n))^2 with deterministic
/// trajectories. Birth times come from the location times, lifetimes from
/// the first continuous aux value (alive until T* when absent).
FitResult least_squares_marks(const GrowthFamily& family, const std::vector<SampledPoint>& data, const Window& w,
                              const SampleSchedule& schedule, std::vector<double> theta0,
                              const LeastSquaresOptions& options = {});

}  // namespace cfmpp

#endif  // CFMPP_INFER_HPP
