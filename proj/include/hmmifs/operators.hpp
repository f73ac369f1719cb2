#pragma once

#include <cstdint>
#include <optional>

#include "hmmifs/model.hpp"

namespace hmmifs {

enum class FilterKind {
  Generic,       // arbitrary h
  JointDensity,  // unnormalized M_n(x) = p(X_{n+1} = x, xi_0..xi_n)
  Normalized,    // prediction filter p(X_{n+1} = x | xi_0..xi_n)
};

/// A grid function h(x_i) together with how it should be read.
struct FilterFunction {
  Vector values;
  FilterKind kind = FilterKind::Generic;
};

/// Integral of h against the grid weights.
double integrate(const FilterFunction& h, const StateGrid& grid);

/// Original operator: (P h)(x) = sum_y p(x, y) f(xi_j | y, xi_{j-1}) h(y) m(y).
/// An empty `xi_prev` selects the initial density f(xi_0 | y).
FilterFunction apply_fuh_operator(const FilterFunction& h, double xi_j, std::optional<double> xi_prev,
                                  const Model& model);

/// Corrected operator: (P h)(x) = sum_y p(y, x) f(xi_j | y, xi_{j-1}) h(y) m(y).
/// With h = M_{n-1} the result is M_n.
FilterFunction apply_corrected_operator(const FilterFunction& h, double xi_j, std::optional<double> xi_prev,
                                        const Model& model);

/// Both operators with the emission density supplied directly over the grid.
FilterFunction apply_fuh_operator(const FilterFunction& h, const Vector& density, const Model& model);
FilterFunction apply_corrected_operator(const FilterFunction& h, const Vector& density, const Model& model);

/// M_n = P(xi_n) o ... o P(xi_0) pi, evaluated in linear space.
///
/// Only meant for short sequences; throws NumericalError once every entry has
/// underflowed to zero.
FilterFunction corrected_chain(const Model& model, const ObservationSequence& obs);

/// Integral of corrected_chain over x_{n+1}, i.e. p(xi_0, ..., xi_n).
double joint_density_via_composition(const Model& model, const ObservationSequence& obs);

/// The scalar obtained by composing the original operators as written:
///   sum pi(x_n) prod_{j=n..1} p(x_{j-1}, x_j) f(xi_j | x_j, xi_{j-1}) f(xi_0 | x_0),
/// accumulated right to left. Differs from the joint density whenever the
/// chain is not reversible with pi(x_n) = pi(x_0) along paths.
double fuh_scalar_chain(const Model& model, const ObservationSequence& obs);

inline constexpr std::uint64_t kBruteForceBudget = 10'000'000;

/// Exact joint density by enumerating every hidden path:
///   sum pi(x_0) f(xi_0 | x_0) prod_{j>=1} p(x_{j-1}, x_j) f(xi_j | x_j, xi_{j-1}),
/// each path weighted by prod m(x_j). Throws ValidationError when
/// (grid size)^(n+1) exceeds `budget`.
double joint_density_bruteforce(const Model& model, const ObservationSequence& obs,
                                std::uint64_t budget = kBruteForceBudget);

}  // namespace hmmifs
