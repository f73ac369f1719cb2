#include "hmmifs/derivatives.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "hmmifs/errors.hpp"
#include "hmmifs/kernels.hpp"

namespace hmmifs {

namespace {

double step_for(double value, double rel) { return rel * std::max(1.0, std::abs(value)); }

Vector shifted(const Vector& theta, Index k, double delta) {
  Vector out = theta;
  out(k) += delta;
  return out;
}

// Advances the tangent state by one corrected-operator application of `h`
// (with derivative `dh`) under emission density `density`.
TangentState advance(const Vector& h, const Matrix& dh, Index step, double log_lik_before,
                     const Vector& dlog_lik_before, double xi, std::optional<double> prev, const Model& model) {
  const Vector& w = model.grid().weights;
  const Matrix& p = model.transition();
  const Vector f = model.emission_density(xi, prev);
  const Vector u = kernels::forward_apply(p, w, f, h);
  const double c = kernels::integrate(w, u);
  if (!(c > 0.0) || !std::isfinite(c)) throw ImpossibleObservation(static_cast<std::size_t>(step));

  const Index d = model.num_params();
  TangentState next;
  next.base.filter = {u / c, FilterKind::Normalized};
  next.base.log_c = std::log(c);
  next.base.log_lik = log_lik_before + next.base.log_c;
  next.base.step = step;
  next.dfilter.resize(d, model.num_states());
  next.dlog_c.resize(d);

  const Vector wfh = w.cwiseProduct(f).cwiseProduct(h);
  for (Index k = 0; k < d; ++k) {
    const Vector df = model.emission_derivative(k, xi, prev, f);
    Vector du = kernels::forward_apply(p, w, f, dh.row(k).transpose());
    if (df.any()) du += kernels::forward_apply(p, w, df, h);
    const Matrix dp = model.transition_derivative(k);
    if (dp.any()) du += dp.transpose() * wfh;
    const double dc = kernels::integrate(w, du);
    next.dfilter.row(k) = ((du - (dc / c) * u) / c).transpose();
    next.dlog_c(k) = dc / c;
  }
  next.dlog_lik = dlog_lik_before + next.dlog_c;
  return next;
}

}  // namespace

Matrix stationary_derivative(const Model& model, double step) {
  const Index d = model.num_params();
  Matrix out = Matrix::Zero(d, model.num_states());
  for (Index k = 0; k < d; ++k) {
    if (model.layout()[k].role != ParamRole::TransitionLogit) continue;
    const double theta_k = model.theta()(k);
    const double h = step_for(theta_k, step);
    const Vector plus = model.with_theta(shifted(model.theta(), k, h)).stationary();
    const Vector minus = model.with_theta(shifted(model.theta(), k, -h)).stationary();
    out.row(k) = ((plus - minus) / (2.0 * h)).transpose();
  }
  return out;
}

TangentState init_tangent(const Model& model, double xi_0) {
  return advance(model.stationary(), stationary_derivative(model), 0, 0.0, Vector::Zero(model.num_params()), xi_0,
                 std::nullopt, model);
}

TangentState tangent_filter_step(const TangentState& state, double xi_j, double xi_prev, const Model& model) {
  return advance(state.base.filter.values, state.dfilter, state.base.step + 1, state.base.log_lik, state.dlog_lik,
                 xi_j, xi_prev, model);
}

TangentTrace tangent_trace(const Model& model, const ObservationSequence& obs) {
  obs.validate(model.num_states());
  TangentTrace trace;
  trace.increments.resize(obs.size(), model.num_params());
  const Vector& w = model.grid().weights;
  auto record = [&](const TangentState& s) {
    trace.increments.row(s.base.step) = s.dlog_c.transpose();
    if (s.dfilter.size() > 0) {
      trace.max_row_mass = std::max(trace.max_row_mass, (s.dfilter * w).cwiseAbs().maxCoeff());
    }
  };
  TangentState state = init_tangent(model, obs[0]);
  record(state);
  for (Index t = 1; t < obs.size(); ++t) {
    state = tangent_filter_step(state, obs[t], obs[t - 1], model);
    record(state);
  }
  trace.dlog_lik = state.dlog_lik;
  return trace;
}

Vector score(const Model& model, const ObservationSequence& obs) {
  obs.validate(model.num_states());
  TangentState state = init_tangent(model, obs[0]);
  for (Index t = 1; t < obs.size(); ++t) state = tangent_filter_step(state, obs[t], obs[t - 1], model);
  return state.dlog_lik;
}

Vector score(const ModelSpec& spec, const ObservationSequence& obs, const Vector& theta) {
  return score(build_model(spec, theta), obs);
}

Vector finite_difference_score(const Model& model, const ObservationSequence& obs, double rel_step) {
  const Index d = model.num_params();
  Vector g(d);
  for (Index k = 0; k < d; ++k) {
    const double h = step_for(model.theta()(k), rel_step);
    const double up = loglik(model.with_theta(shifted(model.theta(), k, h)), obs);
    const double down = loglik(model.with_theta(shifted(model.theta(), k, -h)), obs);
    g(k) = (up - down) / (2.0 * h);
  }
  return g;
}

double InformationMatrix::min_eigenvalue() const {
  if (matrix.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(matrix, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff();
}

namespace {

Matrix hessian_from_score(const Model& model, const ObservationSequence& obs) {
  const Index d = model.num_params();
  Matrix hess(d, d);
  for (Index j = 0; j < d; ++j) {
    const double h = step_for(model.theta()(j), kScoreFdStep);
    const Vector up = score(model.with_theta(shifted(model.theta(), j, h)), obs);
    const Vector down = score(model.with_theta(shifted(model.theta(), j, -h)), obs);
    hess.col(j) = (up - down) / (2.0 * h);
  }
  return hess;
}

Matrix hessian_from_loglik(const Model& model, const ObservationSequence& obs) {
  const Index d = model.num_params();
  const Vector& theta = model.theta();
  auto ll = [&](const Vector& t) { return loglik(model.with_theta(t), obs); };
  const double center = ll(theta);

  Vector base_step(d);
  for (Index i = 0; i < d; ++i) base_step(i) = step_for(theta(i), kLoglikFdStep);

  auto second_difference = [&](double scale) {
    Matrix hess(d, d);
    const Vector h = scale * base_step;
    for (Index i = 0; i < d; ++i) {
      const double up = ll(shifted(theta, i, h(i)));
      const double down = ll(shifted(theta, i, -h(i)));
      hess(i, i) = (up - 2.0 * center + down) / (h(i) * h(i));
      for (Index j = 0; j < i; ++j) {
        Vector pp = theta, pm = theta, mp = theta, mm = theta;
        pp(i) += h(i), pp(j) += h(j);
        pm(i) += h(i), pm(j) -= h(j);
        mp(i) -= h(i), mp(j) += h(j);
        mm(i) -= h(i), mm(j) -= h(j);
        hess(i, j) = hess(j, i) = (ll(pp) - ll(pm) - ll(mp) + ll(mm)) / (4.0 * h(i) * h(j));
      }
    }
    return hess;
  };
  // Richardson: both stencils are O(h^2), so (4 D(h) - D(2h)) / 3 is O(h^4).
  return (4.0 * second_difference(1.0) - second_difference(2.0)) / 3.0;
}

}  // namespace

InformationMatrix observed_information(const Model& model, const ObservationSequence& obs, InformationMethod method) {
  obs.validate(model.num_states());
  const Matrix hess =
      method == InformationMethod::AnalyticFd ? hessian_from_score(model, obs) : hessian_from_loglik(model, obs);
  InformationMatrix info;
  const double scale = hess.size() ? hess.cwiseAbs().maxCoeff() : 0.0;
  info.asymmetry = scale > 0.0 ? (hess - hess.transpose()).cwiseAbs().maxCoeff() / scale : 0.0;
  info.matrix = -0.5 * (hess + hess.transpose());
  return info;
}

}  // namespace hmmifs
