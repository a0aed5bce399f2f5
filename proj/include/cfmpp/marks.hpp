#ifndef CFMPP_MARKS_HPP
#define CFMPP_MARKS_HPP

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "cfmpp/core.hpp"
#include "cfmpp/gaussian.hpp"
#include "cfmpp/ground.hpp"
#include "cfmpp/random.hpp"

namespace cfmpp {

/// M_i(t) = f*(g_i, l_i, t).
struct DeterministicMarks {
  std::function<double(const Location&, const AuxMark&, double)> fn;
};

/// i.i.d. scaled Brownian paths started at 0 (random labelling).
struct WienerMarks {
  double scale = 1.0;
};

/// dM = a(M, t) dt + b(M, t) dW, Euler-Maruyama on the mark grid.
struct DiffusionMarks {
  std::function<double(double, double)> drift;
  std::function<double(double, double)> diffusion;
  double initial = 0.0;
};

enum class NegativeMarkPolicy { Clamp, Absorb, Error };

using GrowthFunction = std::function<double(double)>;
/// h(x_i, x_j, m_i, m_j); `distance` is |x_i - x_j| in the window metric.
using InteractionFunction = std::function<double(double distance, double mi, double mj)>;

/// dM_i = [g(M_i) - sum_{j alive, j != i} h(x_i, x_j, M_i, M_j)] dt + sigma(M_i) dW_i
/// on the support [T_i, D_i).
struct GrowthInteraction {
  GrowthFunction growth;
  InteractionFunction interaction;  ///< empty means h = 0
  GrowthFunction noise;             ///< empty means sigma = 0
  double initial = 0.0;
  NegativeMarkPolicy policy = NegativeMarkPolicy::Clamp;
  std::optional<double> cutoff;     ///< ignore pairs further apart than this
};

struct GaussianField {
  IntensityFunction mean = [](const Location&) { return 0.0; };
  CovarianceKernel kernel;
};

/// M_i(t) = Z(X_i, t). With several fields the discrete aux type j selects
/// field j (fields are mutually independent).
struct GeostatisticalMarks {
  std::vector<GaussianField> fields;
};

/// M_i(t) = Lambda(X_i, t) read from a Cox driving field.
struct IntensityDependentMarks {
  std::shared_ptr<const FieldGrid> field;
};

using MarkModel = std::variant<DeterministicMarks, WienerMarks, DiffusionMarks, GrowthInteraction,
                               GeostatisticalMarks, IntensityDependentMarks>;

struct GroundPoint {
  Location location;
  AuxMark aux;
};

/// Named registry entries with numeric parameter vectors.
///   growth:      linear {a, b} -> a (b - m);  logistic {a, b} -> a m (1 - m / b)
///   interaction: none; distance_decay {c, r} -> c m_i m_j exp(-d / r);
///                disk_overlap {c} -> c max(0, m_i + m_j - d)
///   noise:       constant {s} -> s;  proportional {s} -> s m
GrowthFunction growth_function(const std::string& name, const std::vector<double>& params);
InteractionFunction interaction_function(const std::string& name, const std::vector<double>& params);
GrowthFunction noise_function(const std::string& name, const std::vector<double>& params);

/// Marks for the given ground points. Growth-interaction marks use the event
/// time as birth time and the first continuous aux value (if any) as lifetime.
std::vector<CadlagPath> attach_marks(const std::vector<GroundPoint>& ground, const MarkModel& model,
                                     const std::vector<double>& grid, RngSeed seed,
                                     const Window* window = nullptr);

struct GrowthPoint {
  Location location;  ///< (x_i, T_i)
  double lifetime = kInfinity;
};

/// Integrates the growth-interaction system on the grid 0, step, ..., horizon.
/// Births and deaths falling inside a grid interval split the step. RK4 when
/// the noise is absent, Euler-Maruyama otherwise.
std::vector<CadlagPath> gi_integrate(const std::vector<GrowthPoint>& points, const GrowthInteraction& model,
                                     double step, double horizon, RngSeed seed,
                                     const Window* window = nullptr);

std::vector<CadlagPath> geostat_marking(const std::vector<GroundPoint>& ground, const GeostatisticalMarks& field,
                                        const std::vector<double>& grid, RngSeed seed,
                                        const Window* window = nullptr);

std::vector<CadlagPath> intensity_dependent_marking(const FieldGrid& field, const std::vector<Location>& ground,
                                                    const std::vector<double>& grid);

/// (M(s_1), ..., M(s_k)).
std::vector<double> sample_at(const CadlagPath& mark, const SampleSchedule& schedule);

/// A density value together with the degenerate-law flag. Degenerate laws
/// (deterministic marks) have no density; callers drop the factor.
struct DensityValue {
  double value = 1.0;
  bool degenerate = false;
};

/// Initial density f^{s_1}(u) and transition densities p_{t,s}(u_t; u_s).
struct FidiDensitySpec {
  std::function<double(double u, double s)> initial;
  std::function<double(double u, double t, double u_prev, double s_prev)> transition;
  bool degenerate = false;

  /// sigma-scaled Brownian motion started at 0 at time 0.
  static FidiDensitySpec brownian(double sigma = 1.0);
  static FidiDensitySpec deterministic();
};

DensityValue fidi_density_eval(const FidiDensitySpec& spec, const SampleSchedule& schedule,
                               const std::vector<double>& u);
/// Product over the rows of u (one row per point).
DensityValue fidi_density_eval(const FidiDensitySpec& spec, const SampleSchedule& schedule,
                               const std::vector<std::vector<double>>& u);

/// Auxiliary-mark densities with respect to nu_A.
struct AuxDensitySpec {
  AuxReference reference;
  /// P(type = j | g) for j = 1..k_A; empty means uniform over reference.types.
  std::function<std::vector<double>(const Location&)> type_probabilities;
  /// Density of the continuous part with respect to nu_A; empty means none.
  std::function<double(const std::vector<double>&, const Location&)> continuous;
  /// Non-product joint density; overrides the product form when set.
  std::function<double(const std::vector<Location>&, const std::vector<AuxMark>&)> joint;

  static AuxDensitySpec uniform_types(int types);
  /// Exp(rate) lifetimes. The density is taken with respect to `reference`
  /// (Lebesgue or the unit-rate exponential law).
  static AuxDensitySpec exponential(double rate, AuxReference::Kind reference = AuxReference::Kind::Lebesgue);
};

double aux_density_eval(const AuxDensitySpec& spec, const std::vector<Location>& locations,
                        const std::vector<AuxMark>& aux);
double aux_density_eval(const AuxDensitySpec& spec, const Location& location, const AuxMark& aux);

}  // namespace cfmpp

#endif  // CFMPP_MARKS_HPP
