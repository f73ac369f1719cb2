#pragma once

#include <cstdint>
#include <initializer_list>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace hmmifs {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

/// Quadrature grid over the hidden state space: points x_i and weights m(dx_i).
///
/// Categorical state spaces use unit weights (counting measure). Continuous
/// state spaces are approximated by an explicit grid, e.g. trapezoid().
struct StateGrid {
  Vector points;
  Vector weights;

  Index size() const { return points.size(); }

  /// Throws ValidationError unless points are strictly increasing and weights
  /// are positive with matching length.
  void validate() const;

  static StateGrid categorical(Index n);
  static StateGrid categorical(const Vector& points);
  static StateGrid trapezoid(double lo, double hi, Index n);
};

enum class ParamRole {
  TransitionLogit,  // logit (row, col) of the transition kernel
  EmissionShift,    // common shift mu of all emission means
  EmissionOffset,   // per-state mean offset of state `row`
  EmissionAr,       // autoregressive coefficient rho on the previous observation
};

std::string to_string(ParamRole role);
ParamRole param_role_from_string(const std::string& name);

struct ParamComponent {
  std::string name;
  ParamRole role = ParamRole::EmissionShift;
  Index row = 0;  // transition row, or the state for EmissionOffset
  Index col = 0;  // transition column
};

/// Declared mapping from parameter components to model quantities.
class ParamLayout {
 public:
  ParamLayout() = default;
  explicit ParamLayout(std::vector<ParamComponent> components);

  Index size() const { return static_cast<Index>(components_.size()); }
  bool empty() const { return components_.empty(); }
  const ParamComponent& operator[](Index k) const { return components_[static_cast<std::size_t>(k)]; }
  const std::vector<ParamComponent>& components() const { return components_; }

  /// Position of the component called `name`; throws ValidationError if absent.
  Index index_of(const std::string& name) const;

  /// Checks name uniqueness and that no model quantity is targeted twice.
  void validate(Index num_states) const;

 private:
  std::vector<ParamComponent> components_;
};

struct ParamVector {
  ParamLayout layout;
  Vector values;

  double operator[](const std::string& name) const { return values(layout.index_of(name)); }
};

enum class EmissionFamily { GaussianMean, GaussianAr, Table };

std::string to_string(EmissionFamily family);
EmissionFamily emission_family_from_string(const std::string& name);

/// Emission density f(xi_t | x_t, xi_{t-1}) and initial density f(xi_0 | x_0).
///
/// Gaussian families have unit variance and mean x_i + shift + offsets(i),
/// plus ar * xi_{t-1} for GaussianAr when a previous observation exists.
/// The Table family assigns table(i, v) to observation symbols(v) and zero to
/// every other value.
struct EmissionKernel {
  EmissionFamily family = EmissionFamily::GaussianMean;
  double shift = 0.0;
  double ar = 0.0;
  Vector offsets;  // empty means all zero
  Vector symbols;
  Matrix table;

  void validate(const StateGrid& grid) const;

  bool is_gaussian() const { return family != EmissionFamily::Table; }

  /// Emission means over the grid; only meaningful for Gaussian families.
  Vector means(const StateGrid& grid, std::optional<double> prev) const;

  /// Density of `xi` at every grid state. `prev` is empty for the initial
  /// observation.
  Vector density(const StateGrid& grid, double xi, std::optional<double> prev) const;
};

/// Parametric model family: everything needed to materialize a Model at a
/// given parameter value.
struct ModelSpec {
  StateGrid grid;
  std::optional<Matrix> fixed_transition;  // used instead of logits when set
  Matrix base_logits;
  EmissionKernel emission;
  ParamLayout layout;

  /// Parameter values read off the base logits and emission parameters.
  Vector default_theta() const;
  ParamVector default_params() const { return {layout, default_theta()}; }

  void validate() const;
};

/// Row-softmax against grid weights: P(i, j) = exp(l_ij) / sum_k w_k exp(l_ik).
Matrix softmax_rows(const Matrix& logits, const Vector& weights);

/// Throws ValidationError unless `transition` is nonnegative with every row
/// integrating to one against the grid weights (tolerance 1e-12).
void validate_transition(const Matrix& transition, const StateGrid& grid);

/// Solves pi(x) = sum_y pi(y) p(y, x) m(y) with sum_x pi(x) m(x) = 1.
///
/// The normalization replaces the last (redundant) balance equation. Throws
/// NumericalError when the system is rank deficient beyond that, which is the
/// case for chains without a unique stationary law.
Vector stationary_distribution(const Matrix& transition, const StateGrid& grid);

/// Validated hidden Markov model at a fixed parameter value. Immutable.
class Model {
 public:
  Model(ModelSpec spec, Vector theta);

  const ModelSpec& spec() const { return spec_; }
  const StateGrid& grid() const { return spec_.grid; }
  const ParamLayout& layout() const { return spec_.layout; }
  const Vector& theta() const { return theta_; }
  ParamVector params() const { return {spec_.layout, theta_}; }
  const Matrix& transition() const { return transition_; }
  const Vector& stationary() const { return stationary_; }
  const EmissionKernel& emission() const { return emission_; }
  Index num_states() const { return spec_.grid.size(); }
  Index num_params() const { return theta_.size(); }

  Vector emission_density(double xi, std::optional<double> prev) const {
    return emission_.density(spec_.grid, xi, prev);
  }

  /// d transition / d theta_k.
  Matrix transition_derivative(Index k) const;

  /// d f(xi | x, prev) / d theta_k over the grid, given f = emission_density.
  Vector emission_derivative(Index k, double xi, std::optional<double> prev,
                             const Vector& density) const;

  /// Same model family at another parameter value.
  Model with_theta(const Vector& theta) const { return Model(spec_, theta); }

 private:
  ModelSpec spec_;
  Vector theta_;
  Matrix logits_;
  Matrix transition_;
  Vector stationary_;
  EmissionKernel emission_;
};

Model build_model(const ModelSpec& spec, const Vector& theta);
inline Model build_model(const ModelSpec& spec) { return build_model(spec, spec.default_theta()); }

/// Model with a fixed transition matrix and no free parameters.
Model make_fixed_model(const StateGrid& grid, const Matrix& transition, const EmissionKernel& emission);

struct ObservationSequence {
  Vector obs;
  std::vector<Index> hidden;  // empty unless simulated
  std::optional<std::uint64_t> seed;

  Index size() const { return obs.size(); }
  double operator[](Index t) const { return obs(t); }

  /// First `count` observations (and hidden states, when stored).
  ObservationSequence head(Index count) const;

  void validate(Index num_states) const;
};

ObservationSequence make_observations(std::initializer_list<double> values);

/// Draws X_0 ~ pi, X_t ~ p(X_{t-1}, .), xi_t ~ f(. | X_t, xi_{t-1}) for
/// t = 0..n. Deterministic in (model, n, seed).
ObservationSequence simulate(const Model& model, Index n, std::uint64_t seed);

}  // namespace hmmifs
