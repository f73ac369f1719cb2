#include "hmmifs/filter.hpp"

#include <cmath>

#include "hmmifs/errors.hpp"

namespace hmmifs {

namespace {

FilterState normalize(FilterFunction u, const Model& model, Index step, double log_lik_before) {
  const double c = integrate(u, model.grid());
  if (!(c > 0.0) || !std::isfinite(c)) throw ImpossibleObservation(static_cast<std::size_t>(step));
  FilterState next;
  next.filter = {u.values / c, FilterKind::Normalized};
  next.log_c = std::log(c);
  next.log_lik = log_lik_before + next.log_c;
  next.step = step;
  return next;
}

template <typename Visit>
void run_filter(const Model& model, const ObservationSequence& obs, Visit&& visit) {
  obs.validate(model.num_states());
  FilterState state = init_filter(model, obs[0]);
  visit(state);
  for (Index t = 1; t < obs.size(); ++t) {
    state = predict_update_step(state, obs[t], obs[t - 1], model);
    visit(state);
  }
}

}  // namespace

FilterState init_filter(const Model& model, double xi_0) {
  const FilterFunction pi{model.stationary(), FilterKind::Normalized};
  return normalize(apply_corrected_operator(pi, xi_0, std::nullopt, model), model, 0, 0.0);
}

FilterState predict_update_step(const FilterState& state, const Vector& density, const Model& model) {
  return normalize(apply_corrected_operator(state.filter, density, model), model, state.step + 1, state.log_lik);
}

FilterState predict_update_step(const FilterState& state, double xi_j, double xi_prev, const Model& model) {
  return predict_update_step(state, model.emission_density(xi_j, xi_prev), model);
}

double loglik(const Model& model, const ObservationSequence& obs) {
  double out = 0.0;
  run_filter(model, obs, [&](const FilterState& s) { out = s.log_lik; });
  return out;
}

UnnormalizedTrace unnormalized_filter_trace(const Model& model, const ObservationSequence& obs) {
  UnnormalizedTrace trace;
  trace.log_c.resize(obs.size());
  trace.log_mass.resize(obs.size());
  trace.filter_mass.resize(obs.size());
  run_filter(model, obs, [&](const FilterState& s) {
    trace.log_c(s.step) = s.log_c;
    trace.log_mass(s.step) = s.log_lik;
    trace.filter_mass(s.step) = integrate(s.filter, model.grid());
  });
  return trace;
}

}  // namespace hmmifs
