#include "hmmifs/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "hmmifs/derivatives.hpp"
#include "hmmifs/errors.hpp"
#include "hmmifs/operators.hpp"
#include "hmmifs/parallel.hpp"

namespace hmmifs {

namespace {

double relative_gap(double value, double reference) { return std::abs(value - reference) / std::abs(reference); }

std::string describe(const Model& model) {
  std::ostringstream out;
  out << model.num_states() << "-state " << to_string(model.emission().family) << " model";
  return out.str();
}

}  // namespace

// --- Operator mismatch --------------------------------------------------

double MismatchReport::max_corrected_gap() const {
  double gap = 0.0;
  for (const auto& r : rows) gap = std::max(gap, r.corrected_gap);
  return gap;
}

MismatchReport operator_mismatch_report(const Model& model, const std::vector<ObservationSequence>& sequences,
                                        int jobs) {
  MismatchReport report;
  report.model = describe(model);
  report.rows = parallel_map<MismatchRow>(sequences.size(), jobs, [&](std::size_t i) {
    const auto& obs = sequences[i];
    MismatchRow row;
    row.length = obs.size();
    row.bruteforce = joint_density_bruteforce(model, obs);
    row.fuh = fuh_scalar_chain(model, obs);
    row.corrected = joint_density_via_composition(model, obs);
    row.fuh_gap = relative_gap(row.fuh, row.bruteforce);
    row.corrected_gap = relative_gap(row.corrected, row.bruteforce);
    return row;
  });
  return report;
}

// --- Degeneracy -----------------------------------------------------------

double gaussian_log_mass_bound() { return -0.5 * std::log(2.0 * M_PI); }

DegeneracyReport degeneracy_report(const Model& model, Index n, std::uint64_t seed) {
  if (n < 20) throw ValidationError("degeneracy report needs n >= 20");
  DegeneracyReport report;
  report.n = n;
  report.seed = seed;
  report.trace = unnormalized_filter_trace(model, simulate(model, n, seed));

  const Index len = report.trace.log_mass.size();
  const Vector steps = Vector::LinSpaced(len, 0.0, static_cast<double>(len - 1));
  const Vector xc = steps.array() - steps.mean();
  const Vector yc = report.trace.log_mass.array() - report.trace.log_mass.mean();
  report.slope = xc.dot(yc) / xc.squaredNorm();
  report.intercept = report.trace.log_mass.mean() - report.slope * steps.mean();

  report.bound_applies = model.emission().is_gaussian();
  const Vector bound_line = (steps.array() + 1.0) * gaussian_log_mass_bound();
  report.max_bound_excess = (report.trace.log_mass - bound_line).maxCoeff();
  report.max_filter_mass_error = (report.trace.filter_mass.array() - 1.0).abs().maxCoeff();
  return report;
}

// --- Score increments vs filter pairs ------------------------------------

std::string to_string(ScoreSystemReport::Outcome outcome) {
  switch (outcome) {
    case ScoreSystemReport::Outcome::Demonstrated: return "demonstrated";
    case ScoreSystemReport::Outcome::NotDemonstrated: return "not-demonstrated";
    case ScoreSystemReport::Outcome::Degenerate: return "degenerate";
    case ScoreSystemReport::Outcome::Inconclusive: return "inconclusive";
  }
  return "unknown";
}

ScoreSystemReport score_system_check(const Model& model, const ObservationSequence& obs) {
  obs.validate(model.num_states());
  ScoreSystemReport report;
  report.theta_a = model.theta();
  if (model.num_params() > 0) {
    report.fd_residual = (score(model, obs) - finite_difference_score(model, obs)).cwiseAbs().maxCoeff();
  }

  auto first_step = [&](const Model& m, Vector& prior, Vector& filter, Vector& increment) {
    const TangentState s = init_tangent(m, obs[0]);
    prior = m.stationary();
    filter = s.base.filter.values;
    increment = s.dlog_c;
  };
  auto finish = [&](const Model& b) {
    first_step(model, report.prior_a, report.filter_a, report.increment_a);
    first_step(b, report.prior_b, report.filter_b, report.increment_b);
    report.theta_b = b.theta();
    report.filter_gap = std::max((report.prior_a - report.prior_b).cwiseAbs().maxCoeff(),
                                 (report.filter_a - report.filter_b).cwiseAbs().maxCoeff());
    report.increment_gap =
        report.increment_a.size() ? (report.increment_a - report.increment_b).cwiseAbs().maxCoeff() : 0.0;
  };

  if (model.num_states() == 1) {
    finish(model);
    report.outcome = ScoreSystemReport::Outcome::Degenerate;
    report.note = "one-state model: the filter is constant and the pair carries no information";
    return report;
  }

  Index shift = -1, offset = -1;
  for (Index k = 0; k < model.num_params(); ++k) {
    const auto& c = model.layout()[k];
    if (c.role == ParamRole::EmissionShift) shift = k;
    if (c.role == ParamRole::EmissionOffset && c.row == 1) offset = k;
  }
  if (model.num_states() != 2 || !model.emission().is_gaussian() || shift < 0 || offset < 0) {
    report.outcome = ScoreSystemReport::Outcome::Inconclusive;
    report.note = "construction needs a two-state Gaussian model with an emission shift and a state-1 offset";
    return report;
  }

  const double xi = obs[0];
  const Vector means = model.emission().means(model.grid(), std::nullopt);
  const double log_ratio = 0.5 * ((xi - means(0)) * (xi - means(0)) - (xi - means(1)) * (xi - means(1)));
  for (double delta : {0.5, -0.5}) {
    const double m0 = means(0) + delta;
    const double rhs = (xi - m0) * (xi - m0) - 2.0 * log_ratio;
    if (rhs < 0.0) continue;
    const double target = means(1) + delta;
    const double r = std::sqrt(rhs);
    const double m1 = std::abs(xi + r - target) <= std::abs(xi - r - target) ? xi + r : xi - r;
    Vector theta_b = model.theta();
    theta_b(shift) += delta;
    theta_b(offset) += m1 - target;
    finish(model.with_theta(theta_b));
    const bool matched = report.filter_gap <= 1e-12;
    report.outcome = matched && report.increment_gap > 1e-3 ? ScoreSystemReport::Outcome::Demonstrated
                                                            : ScoreSystemReport::Outcome::NotDemonstrated;
    report.note = matched ? "filter pair matched at step 0" : "filter pair could not be matched";
    return report;
  }
  report.outcome = ScoreSystemReport::Outcome::Inconclusive;
  report.note = "no real root for the matching state-1 mean";
  return report;
}

// --- C5 ratio -------------------------------------------------------------

double c5_log_ratio(double xi_0, double xi_1, double y, double z) {
  return z * z - y * y + (xi_0 + xi_1) * (y - z);
}

double c5_ratio(double xi_0, double xi_1, double y, double z) { return std::exp(c5_log_ratio(xi_0, xi_1, y, z)); }

double c5_direct_ratio(double xi_0, double xi_1, double y, double z) {
  const auto phi = [](double r) { return std::exp(-0.5 * r * r) / std::sqrt(2.0 * M_PI); };
  return (phi(xi_0 - y) * phi(xi_1 - y)) / (phi(xi_0 - z) * phi(xi_1 - z));
}

bool C5ScanResult::strictly_increasing() const {
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (!(rows[i].supremum > rows[i - 1].supremum)) return false;
  }
  return true;
}

C5ScanResult c5_sup_scan(double xi_0, double xi_1, const std::vector<double>& bounds, double step, int jobs) {
  if (!(step > 0.0) || !std::isfinite(step)) throw ValidationError("scan step must be positive");
  if (bounds.empty()) throw ValidationError("scan needs at least one bound");
  for (std::size_t i = 0; i < bounds.size(); ++i) {
    if (!(bounds[i] >= 0.0) || !std::isfinite(bounds[i])) throw ValidationError("bounds must be finite and >= 0");
    if (i > 0 && !(bounds[i] > bounds[i - 1])) throw ValidationError("bounds must be strictly increasing");
    const double cells = bounds[i] / step;
    if (std::abs(cells - std::round(cells)) > 1e-9 * std::max(1.0, cells)) {
      throw ValidationError("bound " + std::to_string(bounds[i]) + " is not a multiple of the step");
    }
  }

  C5ScanResult result;
  result.xi_0 = xi_0;
  result.xi_1 = xi_1;
  result.step = step;
  result.rows = parallel_map<C5ScanRow>(bounds.size(), jobs, [&](std::size_t b) {
    const double bound = bounds[b];
    const auto cells = static_cast<Index>(std::llround(bound / step));
    auto point = [&](Index k) { return cells == 0 ? 0.0 : bound * static_cast<double>(k) / static_cast<double>(cells); };
    C5ScanRow best{bound, 0.0, 0.0, c5_log_ratio(xi_0, xi_1, 0.0, 0.0), 0.0};
    bool first = true;
    for (Index i = -cells; i <= cells; ++i) {
      for (Index j = -cells; j <= cells; ++j) {
        const double y = point(i), z = point(j);
        const double lr = c5_log_ratio(xi_0, xi_1, y, z);
        if (first || lr > best.log_ratio) {
          best = {bound, y, z, lr, 0.0};
          first = false;
        }
      }
    }
    best.supremum = std::exp(best.log_ratio);
    return best;
  });
  return result;
}

}  // namespace hmmifs
