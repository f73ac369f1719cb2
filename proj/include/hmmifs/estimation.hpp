#pragma once

#include <string>
#include <vector>

#include "hmmifs/derivatives.hpp"
#include "hmmifs/model.hpp"

namespace hmmifs {

struct OptimizerOptions {
  double score_tolerance = 1e-6;  // stop when ||score||_inf falls below
  int max_iterations = 500;
  double sufficient_increase = 1e-4;  // Armijo constant
  int max_backtracks = 60;
};

struct FitIteration {
  int iteration = 0;
  Vector theta;
  double log_lik = 0.0;
  double score_norm = 0.0;
};

struct FitResult {
  ParamVector theta_hat;
  double log_lik_hat = 0.0;
  Vector score;
  InformationMatrix info;
  Vector std_errors;  // sqrt(diag(info^-1)); empty unless info is positive definite
  bool converged = false;
  int iterations = 0;
  std::vector<FitIteration> trace;
};

/// Maximizes loglik over theta by BFGS with a backtracking line search.
///
/// Parameter values where some observation becomes impossible count as
/// objective -inf, so the line search backs off from them. Throws
/// ValidationError for a non-finite theta0 and NumericalError when the
/// objective at theta0 is not finite.
FitResult mle_fit(const ModelSpec& family, const ObservationSequence& obs, const Vector& theta0,
                  const OptimizerOptions& options = {});

struct ProfilePoint {
  double value = 0.0;
  double log_lik = 0.0;  // -inf where an observation is impossible
};

/// loglik along one component with the others held at theta_rest.
std::vector<ProfilePoint> profile_loglik(const ModelSpec& family, const ObservationSequence& obs,
                                         const std::string& component, const std::vector<double>& grid,
                                         const Vector& theta_rest, int jobs = 1);

}  // namespace hmmifs
