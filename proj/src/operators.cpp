#include "hmmifs/operators.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "hmmifs/errors.hpp"
#include "hmmifs/kernels.hpp"

namespace hmmifs {

namespace {

std::optional<double> previous(const ObservationSequence& obs, Index t) {
  if (t == 0) return std::nullopt;
  return obs[t - 1];
}

void check_dimension(const Vector& values, const Model& model, const char* what) {
  if (values.size() != model.num_states()) {
    throw ValidationError(std::string(what) + " has " + std::to_string(values.size()) +
                          " entries but the grid has " + std::to_string(model.num_states()));
  }
}

FilterKind propagated(FilterKind kind) {
  return kind == FilterKind::Generic ? FilterKind::Generic : FilterKind::JointDensity;
}

}  // namespace

double integrate(const FilterFunction& h, const StateGrid& grid) {
  return kernels::integrate(grid.weights, h.values);
}

FilterFunction apply_fuh_operator(const FilterFunction& h, const Vector& density, const Model& model) {
  check_dimension(h.values, model, "function");
  check_dimension(density, model, "density");
  return {kernels::backward_apply(model.transition(), model.grid().weights, density, h.values),
          propagated(h.kind)};
}

FilterFunction apply_corrected_operator(const FilterFunction& h, const Vector& density, const Model& model) {
  check_dimension(h.values, model, "function");
  check_dimension(density, model, "density");
  return {kernels::forward_apply(model.transition(), model.grid().weights, density, h.values),
          propagated(h.kind)};
}

FilterFunction apply_fuh_operator(const FilterFunction& h, double xi_j, std::optional<double> xi_prev,
                                  const Model& model) {
  return apply_fuh_operator(h, model.emission_density(xi_j, xi_prev), model);
}

FilterFunction apply_corrected_operator(const FilterFunction& h, double xi_j, std::optional<double> xi_prev,
                                        const Model& model) {
  return apply_corrected_operator(h, model.emission_density(xi_j, xi_prev), model);
}

FilterFunction corrected_chain(const Model& model, const ObservationSequence& obs) {
  obs.validate(model.num_states());
  FilterFunction m{model.stationary(), FilterKind::JointDensity};
  for (Index t = 0; t < obs.size(); ++t) {
    m = apply_corrected_operator(m, obs[t], previous(obs, t), model);
    if ((m.values.array() == 0.0).all()) {
      throw NumericalError("chain too long for linear-space evaluation (underflow at step " +
                           std::to_string(t) + ")");
    }
  }
  return m;
}

double joint_density_via_composition(const Model& model, const ObservationSequence& obs) {
  return integrate(corrected_chain(model, obs), model.grid());
}

double fuh_scalar_chain(const Model& model, const ObservationSequence& obs) {
  obs.validate(model.num_states());
  const Index n = obs.size() - 1;
  const Vector& w = model.grid().weights;
  // v_n = pi f_n, v_{j-1}(x) = f_{j-1}(x) sum_y p(x, y) m(y) v_j(y), result sum_x m(x) v_0(x).
  Vector v = model.stationary().cwiseProduct(model.emission_density(obs[n], previous(obs, n)));
  for (Index j = n; j >= 1; --j) {
    const Vector carried = model.transition() * w.cwiseProduct(v);
    v = model.emission_density(obs[j - 1], previous(obs, j - 1)).cwiseProduct(carried);
  }
  return kernels::integrate(w, v);
}

double joint_density_bruteforce(const Model& model, const ObservationSequence& obs, std::uint64_t budget) {
  obs.validate(model.num_states());
  const Index k = model.num_states();
  const Index len = obs.size();
  double paths = 1.0;
  for (Index t = 0; t < len; ++t) paths *= static_cast<double>(k);
  if (paths > static_cast<double>(budget)) {
    throw ValidationError("brute-force enumeration of " + std::to_string(paths) + " paths exceeds budget");
  }

  std::vector<Vector> dens;
  dens.reserve(static_cast<std::size_t>(len));
  for (Index t = 0; t < len; ++t) dens.push_back(model.emission_density(obs[t], previous(obs, t)));
  const Matrix& p = model.transition();
  const Vector& w = model.grid().weights;
  const Vector& pi = model.stationary();

  std::vector<Index> path(static_cast<std::size_t>(len), 0);
  double total = 0.0;
  for (;;) {
    double v = pi(path[0]) * w(path[0]) * dens[0](path[0]);
    for (Index t = 1; t < len; ++t) {
      const Index a = path[static_cast<std::size_t>(t - 1)], b = path[static_cast<std::size_t>(t)];
      v *= p(a, b) * w(b) * dens[static_cast<std::size_t>(t)](b);
    }
    total += v;
    Index pos = len - 1;
    while (pos >= 0 && ++path[static_cast<std::size_t>(pos)] == k) path[static_cast<std::size_t>(pos--)] = 0;
    if (pos < 0) break;
  }
  return total;
}

}  // namespace hmmifs
