#pragma once

#include <cmath>
#include <random>
#include <string>

#include "hmmifs/io.hpp"
#include "hmmifs/model.hpp"

namespace hmmifs::testing {

inline std::string data_path(const std::string& name) { return std::string(HMMIFS_DATA_DIR) + "/" + name; }

inline double phi(double r) { return std::exp(-0.5 * r * r) / std::sqrt(2.0 * M_PI); }

inline Matrix m2_matrix() {
  Matrix p(2, 2);
  p << 0.7, 0.3, 0.4, 0.6;
  return p;
}

inline EmissionKernel gaussian_mean(double shift = 0.0) {
  EmissionKernel e;
  e.family = EmissionFamily::GaussianMean;
  e.shift = shift;
  return e;
}

inline EmissionKernel gaussian_ar(double ar, double shift = 0.0) {
  EmissionKernel e = gaussian_mean(shift);
  e.family = EmissionFamily::GaussianAr;
  e.ar = ar;
  return e;
}

/// Reference model: states {0, 1}, P = [[0.7, 0.3], [0.4, 0.6]], unit Gaussian around the state.
inline Model m2() { return make_fixed_model(StateGrid::categorical(2), m2_matrix(), gaussian_mean()); }

/// The same chain parameterized by (a01, a10, mu) with diagonal logits fixed at 0.
inline ModelSpec m2_family(EmissionKernel emission = gaussian_mean()) {
  ModelSpec spec;
  spec.grid = StateGrid::categorical(2);
  spec.base_logits = Matrix::Zero(2, 2);
  spec.base_logits(0, 1) = std::log(3.0 / 7.0);
  spec.base_logits(1, 0) = std::log(4.0 / 6.0);
  spec.emission = emission;
  std::vector<ParamComponent> c{{"a01", ParamRole::TransitionLogit, 0, 1},
                                {"a10", ParamRole::TransitionLogit, 1, 0},
                                {"mu", ParamRole::EmissionShift, 0, 0}};
  if (emission.family == EmissionFamily::GaussianAr) c.push_back({"rho", ParamRole::EmissionAr, 0, 0});
  spec.layout = ParamLayout(c);
  return spec;
}

/// One state at x = 0 with free mean shift mu.
inline ModelSpec one_state_family() {
  ModelSpec spec;
  spec.grid = StateGrid::categorical(1);
  spec.base_logits = Matrix::Zero(1, 1);
  spec.emission = gaussian_mean();
  spec.layout = ParamLayout({{"mu", ParamRole::EmissionShift, 0, 0}});
  return spec;
}

/// Random model with up to `max_states` states, random logits (all free),
/// Gaussian or Gaussian-AR emissions with free shift, offsets and AR slot.
/// Roughly half of the draws use non-unit quadrature weights.
inline Model random_model(std::mt19937_64& rng, Index max_states = 4) {
  std::uniform_int_distribution<Index> states(1, max_states);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);

  const Index k = states(rng);
  ModelSpec spec;
  spec.grid.points.resize(k);
  spec.grid.weights.resize(k);
  const bool unit_weights = unit(rng) < 0.5;
  double x = -1.0 + unit(rng);
  for (Index i = 0; i < k; ++i) {
    spec.grid.points(i) = x;
    x += 0.3 + 1.2 * unit(rng);
    spec.grid.weights(i) = unit_weights ? 1.0 : 0.5 + unit(rng);
  }
  spec.base_logits = Matrix::NullaryExpr(k, k, [&] { return normal(rng); });
  spec.emission.family = unit(rng) < 0.5 ? EmissionFamily::GaussianMean : EmissionFamily::GaussianAr;
  spec.emission.shift = unit(rng) - 0.5;
  spec.emission.ar = unit(rng) - 0.5;
  spec.emission.offsets = Vector::NullaryExpr(k, [&] { return 0.3 * normal(rng); });

  std::vector<ParamComponent> layout;
  for (Index i = 0; i < k; ++i) {
    for (Index j = 0; j < k; ++j) {
      if (i != j) layout.push_back({"l" + std::to_string(i) + std::to_string(j), ParamRole::TransitionLogit, i, j});
    }
  }
  layout.push_back({"mu", ParamRole::EmissionShift, 0, 0});
  layout.push_back({"d0", ParamRole::EmissionOffset, 0, 0});
  layout.push_back({"rho", ParamRole::EmissionAr, 0, 0});
  spec.layout = ParamLayout(layout);
  return build_model(spec);
}

}  // namespace hmmifs::testing
