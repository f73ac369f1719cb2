#include "hmmifs/model.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <tuple>
#include <utility>

#include "hmmifs/errors.hpp"

namespace hmmifs {

namespace {

constexpr double kRowSumTol = 1e-12;
constexpr double kStationaryTol = 1e-10;

bool all_finite(const Vector& v) { return v.allFinite(); }

// Strong connectivity of the directed graph with an edge i -> j when P(i, j) > 0.
bool irreducible(const Matrix& transition) {
  const Index n = transition.rows();
  auto reaches_all = [&](bool forward) {
    std::vector<char> seen(static_cast<std::size_t>(n), 0);
    std::vector<Index> stack{0};
    seen[0] = 1;
    while (!stack.empty()) {
      const Index i = stack.back();
      stack.pop_back();
      for (Index j = 0; j < n; ++j) {
        const double p = forward ? transition(i, j) : transition(j, i);
        if (p > 0.0 && !seen[static_cast<std::size_t>(j)]) {
          seen[static_cast<std::size_t>(j)] = 1;
          stack.push_back(j);
        }
      }
    }
    return std::all_of(seen.begin(), seen.end(), [](char c) { return c != 0; });
  };
  return reaches_all(true) && reaches_all(false);
}

}  // namespace

// ---------------------------------------------------------------------------
// StateGrid

void StateGrid::validate() const {
  if (points.size() < 1) throw ValidationError("state grid must have at least one point");
  if (weights.size() != points.size()) {
    throw ValidationError("state grid has " + std::to_string(points.size()) + " points but " +
                          std::to_string(weights.size()) + " weights");
  }
  if (!all_finite(points) || !all_finite(weights)) throw ValidationError("state grid has non-finite entries");
  for (Index i = 1; i < points.size(); ++i) {
    if (!(points(i) > points(i - 1))) throw ValidationError("state grid points must be strictly increasing");
  }
  if ((weights.array() <= 0.0).any()) throw ValidationError("state grid weights must be positive");
}

StateGrid StateGrid::categorical(Index n) {
  return categorical(Vector::LinSpaced(n, 0.0, static_cast<double>(n - 1)));
}

StateGrid StateGrid::categorical(const Vector& points) {
  return StateGrid{points, Vector::Ones(points.size())};
}

StateGrid StateGrid::trapezoid(double lo, double hi, Index n) {
  if (n < 2 || !(hi > lo)) throw ValidationError("trapezoid grid needs n >= 2 and hi > lo");
  StateGrid grid;
  grid.points = Vector::LinSpaced(n, lo, hi);
  const double h = (hi - lo) / static_cast<double>(n - 1);
  grid.weights = Vector::Constant(n, h);
  grid.weights(0) = grid.weights(n - 1) = 0.5 * h;
  return grid;
}

// ---------------------------------------------------------------------------
// Parameters

std::string to_string(ParamRole role) {
  switch (role) {
    case ParamRole::TransitionLogit: return "transition_logit";
    case ParamRole::EmissionShift: return "emission_shift";
    case ParamRole::EmissionOffset: return "emission_offset";
    case ParamRole::EmissionAr: return "emission_ar";
  }
  return "unknown";
}

ParamRole param_role_from_string(const std::string& name) {
  for (auto role : {ParamRole::TransitionLogit, ParamRole::EmissionShift, ParamRole::EmissionOffset,
                    ParamRole::EmissionAr}) {
    if (to_string(role) == name) return role;
  }
  throw ValidationError("unknown parameter role '" + name + "'");
}

ParamLayout::ParamLayout(std::vector<ParamComponent> components) : components_(std::move(components)) {}

Index ParamLayout::index_of(const std::string& name) const {
  for (std::size_t k = 0; k < components_.size(); ++k) {
    if (components_[k].name == name) return static_cast<Index>(k);
  }
  throw ValidationError("no parameter named '" + name + "'");
}

void ParamLayout::validate(Index num_states) const {
  std::set<std::string> names;
  std::set<std::tuple<int, Index, Index>> targets;
  for (const auto& c : components_) {
    if (c.name.empty()) throw ValidationError("parameter with empty name");
    if (!names.insert(c.name).second) throw ValidationError("duplicate parameter name '" + c.name + "'");
    Index row = 0, col = 0;
    switch (c.role) {
      case ParamRole::TransitionLogit:
        if (c.row < 0 || c.row >= num_states || c.col < 0 || c.col >= num_states) {
          throw ValidationError("parameter '" + c.name + "': transition index out of range");
        }
        row = c.row;
        col = c.col;
        break;
      case ParamRole::EmissionOffset:
        if (c.row < 0 || c.row >= num_states) {
          throw ValidationError("parameter '" + c.name + "': state index out of range");
        }
        row = c.row;
        break;
      case ParamRole::EmissionShift:
      case ParamRole::EmissionAr:
        break;
    }
    if (!targets.insert({static_cast<int>(c.role), row, col}).second) {
      throw ValidationError("parameter '" + c.name + "' targets a quantity already in the layout");
    }
  }
}

// ---------------------------------------------------------------------------
// Emissions

std::string to_string(EmissionFamily family) {
  switch (family) {
    case EmissionFamily::GaussianMean: return "gaussian_mean";
    case EmissionFamily::GaussianAr: return "gaussian_ar";
    case EmissionFamily::Table: return "table";
  }
  return "unknown";
}

EmissionFamily emission_family_from_string(const std::string& name) {
  for (auto f : {EmissionFamily::GaussianMean, EmissionFamily::GaussianAr, EmissionFamily::Table}) {
    if (to_string(f) == name) return f;
  }
  throw ValidationError("unknown emission family '" + name + "'");
}

void EmissionKernel::validate(const StateGrid& grid) const {
  if (offsets.size() != 0 && offsets.size() != grid.size()) {
    throw ValidationError("emission offsets must have one entry per state");
  }
  if (!std::isfinite(shift) || !std::isfinite(ar) || !all_finite(offsets)) {
    throw ValidationError("emission parameters must be finite");
  }
  if (family == EmissionFamily::Table) {
    if (symbols.size() == 0) throw ValidationError("emission table needs at least one symbol");
    if (table.rows() != grid.size() || table.cols() != symbols.size()) {
      throw ValidationError("emission table must be (states x symbols)");
    }
    if (!table.allFinite() || (table.array() < 0.0).any()) {
      throw ValidationError("emission table entries must be finite and nonnegative");
    }
  }
}

Vector EmissionKernel::means(const StateGrid& grid, std::optional<double> prev) const {
  Vector m = grid.points.array() + shift;
  if (offsets.size() != 0) m += offsets;
  if (family == EmissionFamily::GaussianAr && prev) m.array() += ar * *prev;
  return m;
}

Vector EmissionKernel::density(const StateGrid& grid, double xi, std::optional<double> prev) const {
  if (family == EmissionFamily::Table) {
    for (Index v = 0; v < symbols.size(); ++v) {
      if (std::abs(xi - symbols(v)) <= 1e-12 * std::max(1.0, std::abs(symbols(v)))) return table.col(v);
    }
    return Vector::Zero(grid.size());
  }
  static const double kNorm = 1.0 / std::sqrt(2.0 * M_PI);
  const Vector r = xi - means(grid, prev).array();
  return kNorm * (-0.5 * r.array().square()).exp();
}

// ---------------------------------------------------------------------------
// ModelSpec

void ModelSpec::validate() const {
  grid.validate();
  const Index n = grid.size();
  if (fixed_transition) {
    if (fixed_transition->rows() != n || fixed_transition->cols() != n) {
      throw ValidationError("transition matrix must be " + std::to_string(n) + "x" + std::to_string(n));
    }
    validate_transition(*fixed_transition, grid);
  } else if (base_logits.rows() != n || base_logits.cols() != n) {
    throw ValidationError("transition logits must be " + std::to_string(n) + "x" + std::to_string(n));
  } else if (!base_logits.allFinite()) {
    throw ValidationError("transition logits must be finite");
  }
  emission.validate(grid);
  layout.validate(n);
  for (const auto& c : layout.components()) {
    if (c.role == ParamRole::TransitionLogit && fixed_transition) {
      throw ValidationError("parameter '" + c.name + "' is a transition logit but the transition matrix is fixed");
    }
    if (c.role != ParamRole::TransitionLogit && !emission.is_gaussian()) {
      throw ValidationError("parameter '" + c.name + "' has no meaning for a table emission");
    }
  }
}

Vector ModelSpec::default_theta() const {
  Vector theta(layout.size());
  for (Index k = 0; k < layout.size(); ++k) {
    const auto& c = layout[k];
    switch (c.role) {
      case ParamRole::TransitionLogit: theta(k) = base_logits(c.row, c.col); break;
      case ParamRole::EmissionShift: theta(k) = emission.shift; break;
      case ParamRole::EmissionOffset: theta(k) = emission.offsets.size() ? emission.offsets(c.row) : 0.0; break;
      case ParamRole::EmissionAr: theta(k) = emission.ar; break;
    }
  }
  return theta;
}

// ---------------------------------------------------------------------------
// Kernel helpers

Matrix softmax_rows(const Matrix& logits, const Vector& weights) {
  Matrix p(logits.rows(), logits.cols());
  for (Index i = 0; i < logits.rows(); ++i) {
    const double top = logits.row(i).maxCoeff();
    const Eigen::RowVectorXd e = (logits.row(i).array() - top).exp();
    p.row(i) = e / e.dot(weights);
  }
  return p;
}

void validate_transition(const Matrix& transition, const StateGrid& grid) {
  if (transition.rows() != grid.size() || transition.cols() != grid.size()) {
    throw ValidationError("transition matrix dimension does not match the grid");
  }
  if (!transition.allFinite() || (transition.array() < 0.0).any()) {
    throw ValidationError("transition matrix entries must be finite and nonnegative");
  }
  const Vector row_mass = transition * grid.weights;
  for (Index i = 0; i < row_mass.size(); ++i) {
    if (std::abs(row_mass(i) - 1.0) > kRowSumTol) {
      throw ValidationError("transition row " + std::to_string(i) + " is not stochastic (mass " +
                            std::to_string(row_mass(i)) + ")");
    }
  }
}

Vector stationary_distribution(const Matrix& transition, const StateGrid& grid) {
  const Index n = grid.size();
  // Balance: sum_y pi(y) w(y) p(y, x) - pi(x) = 0, i.e. (P^T W - I) pi = 0.
  Matrix a = transition.transpose() * grid.weights.asDiagonal();
  a -= Matrix::Identity(n, n);
  a.row(n - 1) = grid.weights.transpose();
  Vector rhs = Vector::Zero(n);
  rhs(n - 1) = 1.0;
  Eigen::FullPivLU<Matrix> lu(a);
  lu.setThreshold(1e-12);
  if (lu.rank() < n) throw NumericalError("stationary system is singular (reducible chain)");
  Vector pi = lu.solve(rhs);
  pi = pi.cwiseMax(0.0);
  pi /= pi.dot(grid.weights);
  return pi;
}

// ---------------------------------------------------------------------------
// Model

Model::Model(ModelSpec spec, Vector theta) : spec_(std::move(spec)), theta_(std::move(theta)) {
  spec_.validate();
  if (theta_.size() != spec_.layout.size()) {
    throw ValidationError("parameter vector has " + std::to_string(theta_.size()) + " entries, layout has " +
                          std::to_string(spec_.layout.size()));
  }
  if (!theta_.allFinite()) throw ValidationError("parameter vector has non-finite entries");

  const Index n = spec_.grid.size();
  emission_ = spec_.emission;
  if (emission_.offsets.size() == 0) emission_.offsets = Vector::Zero(n);
  logits_ = spec_.fixed_transition ? Matrix() : spec_.base_logits;
  for (Index k = 0; k < theta_.size(); ++k) {
    const auto& c = spec_.layout[k];
    switch (c.role) {
      case ParamRole::TransitionLogit: logits_(c.row, c.col) = theta_(k); break;
      case ParamRole::EmissionShift: emission_.shift = theta_(k); break;
      case ParamRole::EmissionOffset: emission_.offsets(c.row) = theta_(k); break;
      case ParamRole::EmissionAr: emission_.ar = theta_(k); break;
    }
  }

  transition_ = spec_.fixed_transition ? *spec_.fixed_transition : softmax_rows(logits_, spec_.grid.weights);
  validate_transition(transition_, spec_.grid);
  if (!irreducible(transition_)) throw ValidationError("reducible chain");
  stationary_ = stationary_distribution(transition_, spec_.grid);

  const Vector balance = transition_.transpose() * (spec_.grid.weights.cwiseProduct(stationary_));
  if ((balance - stationary_).cwiseAbs().maxCoeff() > kStationaryTol) {
    throw NumericalError("stationary distribution failed the balance check");
  }
}

Matrix Model::transition_derivative(Index k) const {
  const Index n = num_states();
  Matrix d = Matrix::Zero(n, n);
  const auto& c = spec_.layout[k];
  if (c.role != ParamRole::TransitionLogit) return d;
  // dP(a, j)/dl(a, b) = P(a, j) (delta_jb - w_b P(a, b))
  const Index a = c.row, b = c.col;
  d.row(a) = -spec_.grid.weights(b) * transition_(a, b) * transition_.row(a);
  d(a, b) += transition_(a, b);
  return d;
}

Vector Model::emission_derivative(Index k, double xi, std::optional<double> prev, const Vector& density) const {
  const Index n = num_states();
  const auto& c = spec_.layout[k];
  if (c.role == ParamRole::TransitionLogit || !emission_.is_gaussian()) return Vector::Zero(n);
  // df/dmean = f (xi - mean) for a unit-variance Gaussian.
  const Vector score = xi - emission_.means(spec_.grid, prev).array();
  switch (c.role) {
    case ParamRole::EmissionShift: return density.cwiseProduct(score);
    case ParamRole::EmissionOffset: {
      Vector d = Vector::Zero(n);
      d(c.row) = density(c.row) * score(c.row);
      return d;
    }
    case ParamRole::EmissionAr:
      if (emission_.family == EmissionFamily::GaussianAr && prev) return *prev * density.cwiseProduct(score);
      return Vector::Zero(n);
    case ParamRole::TransitionLogit: break;
  }
  return Vector::Zero(n);
}

Model build_model(const ModelSpec& spec, const Vector& theta) { return Model(spec, theta); }

Model make_fixed_model(const StateGrid& grid, const Matrix& transition, const EmissionKernel& emission) {
  ModelSpec spec;
  spec.grid = grid;
  spec.fixed_transition = transition;
  spec.emission = emission;
  return Model(std::move(spec), Vector());
}

// ---------------------------------------------------------------------------
// Observations

ObservationSequence ObservationSequence::head(Index count) const {
  if (count < 0 || count > size()) throw ValidationError("observation prefix out of range");
  ObservationSequence out;
  out.obs = obs.head(count);
  if (!hidden.empty()) out.hidden.assign(hidden.begin(), hidden.begin() + count);
  out.seed = seed;
  return out;
}

void ObservationSequence::validate(Index num_states) const {
  if (obs.size() == 0) throw ValidationError("observation sequence is empty");
  if (!obs.allFinite()) throw ValidationError("observation sequence has non-finite entries");
  if (!hidden.empty()) {
    if (static_cast<Index>(hidden.size()) != obs.size()) {
      throw ValidationError("hidden path length differs from observation length");
    }
    for (Index h : hidden) {
      if (h < 0 || h >= num_states) throw ValidationError("hidden state index out of range");
    }
  }
}

ObservationSequence make_observations(std::initializer_list<double> values) {
  ObservationSequence seq;
  seq.obs.resize(static_cast<Index>(values.size()));
  Index t = 0;
  for (double v : values) seq.obs(t++) = v;
  return seq;
}

ObservationSequence simulate(const Model& model, Index n, std::uint64_t seed) {
  if (n < 0) throw ValidationError("simulation length must be nonnegative");
  const auto& grid = model.grid();
  const auto& emission = model.emission();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);

  auto draw_state = [&](const Vector& probs) {
    std::discrete_distribution<Index> pick(probs.data(), probs.data() + probs.size());
    return pick(rng);
  };
  auto draw_obs = [&](Index state, std::optional<double> prev) {
    if (emission.family == EmissionFamily::Table) {
      const Vector row = emission.table.row(state).transpose();
      return emission.symbols(draw_state(row));
    }
    return emission.means(grid, prev)(state) + noise(rng);
  };

  ObservationSequence seq;
  seq.seed = seed;
  seq.obs.resize(n + 1);
  seq.hidden.resize(static_cast<std::size_t>(n + 1));

  Index state = draw_state(model.stationary().cwiseProduct(grid.weights));
  std::optional<double> prev;
  for (Index t = 0; t <= n; ++t) {
    if (t > 0) state = draw_state(model.transition().row(state).transpose().cwiseProduct(grid.weights));
    seq.hidden[static_cast<std::size_t>(t)] = state;
    seq.obs(t) = draw_obs(state, prev);
    prev = seq.obs(t);
  }
  return seq;
}

}  // namespace hmmifs
