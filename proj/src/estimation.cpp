#include "hmmifs/estimation.hpp"

#include <cmath>
#include <limits>

#include "hmmifs/errors.hpp"
#include "hmmifs/filter.hpp"
#include "hmmifs/parallel.hpp"

namespace hmmifs {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Relative size below which changes of the log-likelihood are not resolved.
constexpr double kObjectiveResolution = 1e-12;

struct Evaluation {
  double log_lik = kNegInf;
  Vector score;

  bool finite() const { return std::isfinite(log_lik) && score.allFinite(); }
};

Evaluation evaluate(const ModelSpec& family, const ObservationSequence& obs, const Vector& theta) {
  Evaluation e;
  try {
    const Model model = build_model(family, theta);
    obs.validate(model.num_states());
    TangentState state = init_tangent(model, obs[0]);
    for (Index t = 1; t < obs.size(); ++t) state = tangent_filter_step(state, obs[t], obs[t - 1], model);
    e.log_lik = state.base.log_lik;
    e.score = state.dlog_lik;
  } catch (const ImpossibleObservation&) {
    e.log_lik = kNegInf;
  }
  return e;
}

double sup_norm(const Vector& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace

FitResult mle_fit(const ModelSpec& family, const ObservationSequence& obs, const Vector& theta0,
                  const OptimizerOptions& options) {
  if (!theta0.allFinite()) throw ValidationError("starting parameter vector has non-finite entries");
  if (theta0.size() != family.layout.size()) throw ValidationError("starting parameter vector has wrong length");

  const Index d = theta0.size();
  Vector theta = theta0;
  Evaluation current = evaluate(family, obs, theta);
  if (!current.finite()) throw NumericalError("log-likelihood is not finite at the starting point");

  FitResult result;
  result.trace.push_back({0, theta, current.log_lik, sup_norm(current.score)});

  // Inverse Hessian approximation of -loglik, started so the first step moves
  // no component by more than one unit.
  const auto reset = [&] { return Matrix(Matrix::Identity(d, d) / std::max(1.0, sup_norm(current.score))); };
  Matrix inv_hess = reset();
  bool scaled = false;
  int iteration = 0;
  while (sup_norm(current.score) > options.score_tolerance && iteration < options.max_iterations) {
    const double resolution = kObjectiveResolution * std::max(1.0, std::abs(current.log_lik));
    Vector direction = inv_hess * current.score;  // ascent direction
    double slope = current.score.dot(direction);
    if (!(slope > 0.0)) {
      inv_hess = reset();
      direction = inv_hess * current.score;
      slope = current.score.dot(direction);
    }

    double alpha = 1.0;
    Evaluation trial;
    bool accepted = false;
    if (slope > resolution) {
      for (int b = 0; b <= options.max_backtracks; ++b, alpha *= 0.5) {
        trial = evaluate(family, obs, theta + alpha * direction);
        if (trial.finite() && trial.log_lik >= current.log_lik + options.sufficient_increase * alpha * slope) {
          accepted = true;
          break;
        }
      }
    }
    if (!accepted) {
      // The remaining ascent is below what the objective can resolve: take
      // Newton steps on the exact score and accept on a smaller score.
      const InformationMatrix info = observed_information(build_model(family, theta), obs);
      if (!info.positive_definite()) break;
      inv_hess = info.matrix.inverse();
      direction = inv_hess * current.score;
      alpha = 1.0;
      for (int b = 0; b <= 10; ++b, alpha *= 0.5) {
        trial = evaluate(family, obs, theta + alpha * direction);
        if (trial.finite() && trial.log_lik >= current.log_lik - resolution &&
            sup_norm(trial.score) < sup_norm(current.score)) {
          accepted = true;
          break;
        }
      }
      if (!accepted) break;
    }

    const Vector step = alpha * direction;
    const Vector change = current.score - trial.score;  // gradient change of -loglik
    const double curvature = step.dot(change);
    if (curvature > 1e-12 * step.norm() * change.norm()) {
      if (!scaled) {
        inv_hess = Matrix::Identity(d, d) * (curvature / change.squaredNorm());
        scaled = true;
      }
      const double rho = 1.0 / curvature;
      const Matrix left = Matrix::Identity(d, d) - rho * step * change.transpose();
      inv_hess = left * inv_hess * left.transpose() + rho * step * step.transpose();
    }

    theta += step;
    current = std::move(trial);
    ++iteration;
    result.trace.push_back({iteration, theta, current.log_lik, sup_norm(current.score)});
  }

  result.iterations = iteration;
  result.theta_hat = {family.layout, theta};
  result.log_lik_hat = current.log_lik;
  result.score = current.score;
  const Model fitted = build_model(family, theta);
  result.info = observed_information(fitted, obs);
  if (result.info.positive_definite()) {
    const Matrix cov = result.info.matrix.inverse();
    result.std_errors = cov.diagonal().cwiseSqrt();
  }
  result.converged = sup_norm(current.score) <= options.score_tolerance && result.info.positive_definite();
  return result;
}

std::vector<ProfilePoint> profile_loglik(const ModelSpec& family, const ObservationSequence& obs,
                                         const std::string& component, const std::vector<double>& grid,
                                         const Vector& theta_rest, int jobs) {
  if (grid.empty()) throw ValidationError("profile grid is empty");
  if (theta_rest.size() != family.layout.size()) throw ValidationError("parameter vector has wrong length");
  const Index k = family.layout.index_of(component);
  return parallel_map<ProfilePoint>(grid.size(), jobs, [&](std::size_t i) {
    Vector theta = theta_rest;
    theta(k) = grid[i];
    ProfilePoint point{grid[i], kNegInf};
    try {
      point.log_lik = loglik(build_model(family, theta), obs);
    } catch (const ImpossibleObservation&) {
    }
    return point;
  });
}

}  // namespace hmmifs
