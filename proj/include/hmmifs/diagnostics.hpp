#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hmmifs/filter.hpp"
#include "hmmifs/model.hpp"

namespace hmmifs {

// --- Operator mismatch --------------------------------------------------

struct MismatchRow {
  Index length = 0;  // number of observations, n + 1
  double fuh = 0.0;
  double corrected = 0.0;
  double bruteforce = 0.0;
  double fuh_gap = 0.0;        // |fuh - bruteforce| / bruteforce
  double corrected_gap = 0.0;  // |corrected - bruteforce| / bruteforce
};

struct MismatchReport {
  std::string model;
  std::vector<MismatchRow> rows;

  /// Largest corrected-vs-bruteforce gap over all rows.
  double max_corrected_gap() const;
};

/// Tabulates the literal composition of the original operators against the
/// corrected composition and the brute-force joint density.
MismatchReport operator_mismatch_report(const Model& model, const std::vector<ObservationSequence>& sequences,
                                        int jobs = 1);

// --- Degeneracy of the unnormalized recursion ---------------------------

/// log phi(0): the largest value of log c_n under unit-variance Gaussian emissions.
double gaussian_log_mass_bound();

struct DegeneracyReport {
  Index n = 0;
  std::uint64_t seed = 0;
  UnnormalizedTrace trace;
  double slope = 0.0;  // least-squares slope of log_mass against step
  double intercept = 0.0;
  bool bound_applies = false;  // unit-variance Gaussian emissions
  double max_bound_excess = 0.0;  // max_k log_mass_k - (k + 1) log phi(0)
  double max_filter_mass_error = 0.0;

  bool slope_within_bound() const { return !bound_applies || slope <= gaussian_log_mass_bound(); }
};

/// Simulates n + 1 observations and reads off the drift of log int M_k.
/// Requires n >= 20.
DegeneracyReport degeneracy_report(const Model& model, Index n, std::uint64_t seed);

// --- Score increments vs filter pairs ------------------------------------

struct ScoreSystemReport {
  enum class Outcome { Demonstrated, NotDemonstrated, Degenerate, Inconclusive };

  Outcome outcome = Outcome::Inconclusive;
  std::string note;
  Vector theta_a, theta_b;
  Vector prior_a, prior_b;    // filter entering the step (pi at step 0)
  Vector filter_a, filter_b;  // filter after the step
  Vector increment_a, increment_b;  // d log c_0 / d theta
  double filter_gap = 0.0;
  double increment_gap = 0.0;
  double fd_residual = 0.0;  // positive control: |score - FD(loglik)|_inf on (model, obs)
};

std::string to_string(ScoreSystemReport::Outcome outcome);

/// Builds a second parameter value that reproduces the filter pair of the
/// first step exactly but gives a different score increment.
///
/// Construction (two-state Gaussian models whose layout has an emission shift
/// and an offset for state 1; transition parameters are left alone so pi and P
/// are shared): the step maps pi to P^T(f_0 pi) / c_0, which depends on
/// theta only through the density ratio f_0(x_1) / f_0(x_0), i.e. through
///   L = ((xi_0 - m_0)^2 - (xi_0 - m_1)^2) / 2.
/// Moving the shift by 0.5 and solving L(theta_b) = L(theta_a) for the state-1
/// mean gives (xi_0 - m_1)^2 = (xi_0 - m_0)^2 - 2 L, taking the root nearest
/// the shifted original mean. One-state models are reported as degenerate.
ScoreSystemReport score_system_check(const Model& model, const ObservationSequence& obs);

// --- C5 ratio -------------------------------------------------------------

/// exp{z^2 - y^2 + (xi_0 + xi_1)(y - z)}.
double c5_ratio(double xi_0, double xi_1, double y, double z);
double c5_log_ratio(double xi_0, double xi_1, double y, double z);

/// f(xi_0 | y) f(xi_1 | y, xi_0) / (f(xi_0 | z) f(xi_1 | z, xi_0)) for
/// unit-variance Gaussian emissions with mean equal to the state.
double c5_direct_ratio(double xi_0, double xi_1, double y, double z);

struct C5ScanRow {
  double bound = 0.0;
  double y = 0.0;
  double z = 0.0;
  double log_ratio = 0.0;
  double supremum = 0.0;  // exp(log_ratio)
};

struct C5ScanResult {
  double xi_0 = 0.0;
  double xi_1 = 0.0;
  double step = 0.0;
  std::vector<C5ScanRow> rows;  // one per bound, maximizer included

  bool strictly_increasing() const;
};

/// Maximizes the ratio over the grid {B k / K : |k| <= K}^2, K = B / step,
/// for each bound B. Bounds must be nonnegative, strictly increasing and
/// multiples of step.
C5ScanResult c5_sup_scan(double xi_0, double xi_1, const std::vector<double>& bounds, double step, int jobs = 1);

}  // namespace hmmifs
