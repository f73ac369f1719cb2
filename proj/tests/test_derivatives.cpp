#include <doctest.h>

#include <random>

#include "hmmifs/derivatives.hpp"
#include "hmmifs/errors.hpp"
#include "test_support.hpp"

using namespace hmmifs;
using namespace hmmifs::testing;

TEST_CASE("stationary derivative of the two-state chain") {
  // pi_0 = p10 / (p01 + p10) with p01 = sigmoid(a01), p10 = sigmoid(a10).
  const Model m = build_model(m2_family());
  const double p01 = 0.3, p10 = 0.4, s = p01 + p10;
  const Matrix d = stationary_derivative(m);
  CHECK(d(0, 0) == doctest::Approx(-p10 * p01 * (1 - p01) / (s * s)).epsilon(1e-8));
  CHECK(d(1, 0) == doctest::Approx(p01 * p10 * (1 - p10) / (s * s)).epsilon(1e-8));
  CHECK(d.row(2).isZero());
  CHECK((d * m.grid().weights).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("tangent recursion on the reference family") {
  const Model m = build_model(m2_family());
  const auto obs = make_observations({0.0, 0.0});
  const Vector g = score(m, obs);
  const Vector fd = finite_difference_score(m, obs, 1e-5);
  CHECK((g - fd).cwiseAbs().maxCoeff() <= 1e-6);

  const TangentState t0 = init_tangent(m, 0.0);
  const TangentState t1 = tangent_filter_step(t0, 0.0, 0.0, m);
  CHECK(t1.dlog_lik.isApprox(g, 1e-15));
  CHECK(t1.base.log_lik == doctest::Approx(-2.190914434881806).epsilon(1e-13));
  CHECK((t1.dfilter * m.grid().weights).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("parameters the likelihood ignores get zero score") {
  // GaussianMean has no use for the AR slot.
  ModelSpec spec = m2_family();
  auto comps = spec.layout.components();
  comps.push_back({"rho", ParamRole::EmissionAr, 0, 0});
  spec.layout = ParamLayout(comps);
  const Model m = build_model(spec);
  const auto obs = simulate(m, 30, 4);
  const auto trace = tangent_trace(m, obs);
  CHECK(trace.increments.col(3).isZero(0.0));
  CHECK(trace.dlog_lik(3) == 0.0);
}

TEST_CASE("one-state score") {
  const Model m = build_model(one_state_family());
  CHECK(score(m, make_observations({0.0}))(0) == doctest::Approx(0.0));
  // d/dmu sum log phi(xi_t - mu) = sum (xi_t - mu)
  const auto obs = make_observations({0.5, -1.0, 2.0});
  CHECK(score(m, obs)(0) == doctest::Approx(1.5).epsilon(1e-14));
}

TEST_CASE("score matches finite differences across random models") {
  std::mt19937_64 rng(77);
  std::uniform_int_distribution<Index> len(1, 21);
  double worst = 0.0, row_mass = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const Model m = random_model(rng);
    const auto obs = simulate(m, len(rng) - 1, rng());
    const auto trace = tangent_trace(m, obs);
    const Vector fd = finite_difference_score(m, obs);
    worst = std::max(worst, (trace.dlog_lik - fd).cwiseAbs().maxCoeff());
    row_mass = std::max(row_mass, trace.max_row_mass);
    CHECK(trace.dlog_lik.isApprox(trace.increments.colwise().sum().transpose(), 1e-12));
  }
  CHECK(worst <= 1e-5);
  CHECK(row_mass <= 1e-10);
}

TEST_CASE("observed information") {
  SUBCASE("both numerical routes agree on the reference family") {
    const Model m = build_model(m2_family());
    const auto obs = simulate(m, 49, 7);
    const auto analytic = observed_information(m, obs, InformationMethod::AnalyticFd);
    const auto full = observed_information(m, obs, InformationMethod::FullFd);
    CHECK((analytic.matrix - full.matrix).cwiseAbs().maxCoeff() <= 1e-4);
    CHECK(analytic.matrix == analytic.matrix.transpose());
    CHECK(full.matrix == full.matrix.transpose());
    CHECK(analytic.asymmetry <= 1e-4);
  }
  SUBCASE("one-state Gaussian: information equals the sequence length") {
    const Model m = build_model(one_state_family());
    for (Index n : {1, 10, 50}) {
      const auto obs = simulate(m, n - 1, 3);
      for (auto method : {InformationMethod::AnalyticFd, InformationMethod::FullFd}) {
        const auto info = observed_information(m, obs, method);
        CHECK(std::abs(info.matrix(0, 0) - static_cast<double>(n)) <= 1e-8);
      }
    }
  }
  SUBCASE("impossible observation propagates") {
    EmissionKernel table;
    table.family = EmissionFamily::Table;
    table.symbols = Vector::LinSpaced(2, 0.0, 1.0);
    table.table = Matrix::Constant(2, 2, 0.5);
    ModelSpec spec = m2_family(table);
    spec.layout = ParamLayout({{"a01", ParamRole::TransitionLogit, 0, 1}});
    const Model m = build_model(spec);
    CHECK_THROWS_AS(observed_information(m, make_observations({0.0, 3.0})), ImpossibleObservation);
  }
}
