#pragma once

#include "hmmifs/filter.hpp"
#include "hmmifs/model.hpp"

namespace hmmifs {

/// Joint state of the filter and its parameter derivative: the extended
/// recursion that carries d/dtheta of the normalized filter along with it.
struct TangentState {
  FilterState base;
  Matrix dfilter;  // row k: d filter / d theta_k over the grid
  Vector dlog_lik;  // d log_lik / d theta
  Vector dlog_c;    // d log c / d theta for the latest step
};

inline constexpr double kStationaryFdStep = 1e-6;
inline constexpr double kScoreFdStep = 1e-5;
inline constexpr double kLoglikFdStep = 1e-2;

/// d pi / d theta by central differences of the stationary solve; one row per
/// parameter, zero rows for parameters that do not touch the transition.
Matrix stationary_derivative(const Model& model, double step = kStationaryFdStep);

/// Tangent counterpart of init_filter; d pi enters here.
TangentState init_tangent(const Model& model, double xi_0);

/// Propagates (filter, d filter, d log-lik) through one corrected-operator
/// step. With u = P(xi) h, c = int u:
///   du_k = (dP_k)(h) + P(dh_k) + (P with df_k)(h),  dc_k = int du_k,
///   dh'_k = (du_k - (dc_k / c) u) / c,  dlog_lik_k += dc_k / c.
TangentState tangent_filter_step(const TangentState& state, double xi_j, double xi_prev, const Model& model);

/// Per-step score increments d log c_t / d theta (rows t = 0..n) and the
/// largest |int dfilter_k| seen, as produced by the tangent recursion.
struct TangentTrace {
  Matrix increments;
  Vector dlog_lik;
  double max_row_mass = 0.0;
};

TangentTrace tangent_trace(const Model& model, const ObservationSequence& obs);

/// d log p(xi_0..xi_n) / d theta at the model's parameter value.
Vector score(const Model& model, const ObservationSequence& obs);
Vector score(const ModelSpec& spec, const ObservationSequence& obs, const Vector& theta);

/// Central differences of loglik with step rel_step * max(1, |theta_i|).
Vector finite_difference_score(const Model& model, const ObservationSequence& obs,
                               double rel_step = kScoreFdStep);

enum class InformationMethod {
  AnalyticFd,  // central differences of the analytic score
  FullFd,      // second differences of loglik
};

/// Observed information -d^2 log p / d theta^2, symmetrized.
struct InformationMatrix {
  Matrix matrix;
  double asymmetry = 0.0;  // max |H - H^T| / max |H| before symmetrization

  double min_eigenvalue() const;
  bool positive_definite() const { return matrix.size() > 0 && min_eigenvalue() > 0.0; }
};

/// AnalyticFd uses step 1e-5 * max(1, |theta_i|) on the score. FullFd uses
/// Richardson-extrapolated second differences of loglik with base step
/// 1e-2 * max(1, |theta_i|), which keeps roundoff in the O(n) log-likelihood
/// well below the truncation error.
InformationMatrix observed_information(const Model& model, const ObservationSequence& obs,
                                       InformationMethod method = InformationMethod::AnalyticFd);

}  // namespace hmmifs
