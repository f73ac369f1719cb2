#pragma once

#include "hmmifs/model.hpp"
#include "hmmifs/operators.hpp"

namespace hmmifs {

/// Normalized prediction filter p(X_{n+1} = x | xi_0..xi_n) after step n,
/// with the accumulated log-likelihood sum_{k<=n} log c_k.
struct FilterState {
  FilterFunction filter;
  double log_c = 0.0;  // log normalizer of the latest step
  double log_lik = 0.0;
  Index step = 0;
};

/// Applies the corrected operator for xi_0 to pi and normalizes.
/// Throws ImpossibleObservation(0) if xi_0 has zero density everywhere.
FilterState init_filter(const Model& model, double xi_0);

/// One corrected-operator application to the current filter, then
/// renormalization; the log normalizer is added to log_lik.
FilterState predict_update_step(const FilterState& state, double xi_j, double xi_prev, const Model& model);

/// Same step with an explicit emission density over the grid.
FilterState predict_update_step(const FilterState& state, const Vector& density, const Model& model);

/// log p(xi_0, ..., xi_n). Never forms the joint density in linear space.
double loglik(const Model& model, const ObservationSequence& obs);

/// Log total mass of the unnormalized M_k for every prefix k = 0..n.
struct UnnormalizedTrace {
  Vector log_c;        // per-step log normalizers
  Vector log_mass;     // log integral of M_k = cumulative sum of log_c
  Vector filter_mass;  // integral of the normalized filter after each step
};

UnnormalizedTrace unnormalized_filter_trace(const Model& model, const ObservationSequence& obs);

}  // namespace hmmifs
