#include <doctest.h>

#include <random>

#include "hmmifs/errors.hpp"
#include "hmmifs/filter.hpp"
#include "test_support.hpp"

using namespace hmmifs;
using namespace hmmifs::testing;

namespace {
// Logs of the frozen path-sum densities 0.3316687564518801 and 0.11181445481617298.
constexpr double kLogDensity0 = -1.1036185296515644;
constexpr double kLogDensity00 = -2.190914434881806;
}  // namespace

TEST_CASE("init_filter") {
  const Model m = m2();
  const FilterState s = init_filter(m, 0.0);
  CHECK(s.filter.kind == FilterKind::Normalized);
  CHECK(s.filter.values(0) == doctest::Approx(0.6062000230087892).epsilon(1e-13));
  CHECK(s.filter.values(1) == doctest::Approx(0.39379997699121083).epsilon(1e-13));
  CHECK(s.log_lik == doctest::Approx(kLogDensity0).epsilon(1e-13));
  CHECK(s.step == 0);

  const Model single = make_fixed_model(StateGrid::categorical(1), Matrix::Ones(1, 1), gaussian_mean());
  CHECK(init_filter(single, 3.0).filter.values(0) == 1.0);

  EmissionKernel table;
  table.family = EmissionFamily::Table;
  table.symbols = Vector::LinSpaced(2, 0.0, 1.0);
  table.table = Matrix(2, 2);
  table.table << 0.0, 1.0, 0.0, 1.0;
  const Model never_zero = make_fixed_model(StateGrid::categorical(2), m2_matrix(), table);
  CHECK_THROWS_AS(init_filter(never_zero, 0.0), ImpossibleObservation);
  CHECK_NOTHROW(init_filter(never_zero, 1.0));
}

TEST_CASE("predict_update_step") {
  const Model m = m2();
  const FilterState s0 = init_filter(m, 0.0);
  const FilterState s1 = predict_update_step(s0, 0.0, 0.0, m);
  CHECK(s1.log_lik == doctest::Approx(kLogDensity00).epsilon(1e-13));
  CHECK(s1.step == 1);

  SUBCASE("constant pseudo-emission only moves the chain") {
    const FilterState s = predict_update_step(s0, Vector::Ones(2), m);
    const Vector expected = m.transition().transpose() * s0.filter.values;
    CHECK((s.filter.values - expected).cwiseAbs().maxCoeff() < 1e-15);
    CHECK(std::abs(s.log_c) < 1e-15);
  }
  SUBCASE("one-state model decrements by log f") {
    const Model single = make_fixed_model(StateGrid::categorical(1), Matrix::Ones(1, 1), gaussian_ar(0.5));
    const FilterState a = init_filter(single, 0.2);
    const FilterState b = predict_update_step(a, 1.3, 0.2, single);
    CHECK(b.filter.values(0) == 1.0);
    CHECK(b.log_lik - a.log_lik == doctest::Approx(std::log(phi(1.3 - 0.5 * 0.2))).epsilon(1e-14));
  }
  SUBCASE("impossible observation carries the step") {
    EmissionKernel table;
    table.family = EmissionFamily::Table;
    table.symbols = Vector::LinSpaced(2, 0.0, 1.0);
    table.table = Matrix::Constant(2, 2, 0.5);
    const Model tm = make_fixed_model(StateGrid::categorical(2), m2_matrix(), table);
    const auto obs = make_observations({0.0, 1.0, 7.0});
    try {
      loglik(tm, obs);
      FAIL("expected ImpossibleObservation");
    } catch (const ImpossibleObservation& e) {
      CHECK(e.step() == 2);
    }
  }
}

TEST_CASE("loglik") {
  const Model m = m2();
  CHECK(loglik(m, make_observations({0.0})) == doctest::Approx(kLogDensity0).epsilon(1e-13));
  CHECK(std::abs(loglik(m, make_observations({0.0, 0.0})) - kLogDensity00) <= 1e-9);
  const auto long_seq = simulate(m, 1999, 7);
  CHECK(std::isfinite(loglik(m, long_seq)));
  CHECK_THROWS_AS(loglik(m, ObservationSequence{}), ValidationError);
}

TEST_CASE("loglik matches the path sum on random models") {
  std::mt19937_64 rng(123);
  std::uniform_int_distribution<Index> len(1, 9);
  for (int trial = 0; trial < 200; ++trial) {
    const Model m = random_model(rng);
    const auto obs = simulate(m, len(rng) - 1, rng());
    const double brute = joint_density_bruteforce(m, obs);
    CHECK(std::abs(std::exp(loglik(m, obs)) - brute) / brute <= 1e-9);
  }
}

TEST_CASE("unnormalized trace") {
  const Model m = m2();
  const auto trace = unnormalized_filter_trace(m, make_observations({0.0, 0.0}));
  CHECK(trace.log_mass(0) == doctest::Approx(kLogDensity0).epsilon(1e-13));
  CHECK(trace.log_mass(1) == doctest::Approx(kLogDensity00).epsilon(1e-13));

  const auto obs = simulate(m, 200, 7);
  const auto long_trace = unnormalized_filter_trace(m, obs);
  CHECK(long_trace.log_mass(200) < -180.0);

  const double bound = std::log(phi(0.0));
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    const Model r = random_model(rng);
    const auto seq = simulate(r, 60, rng());
    const auto t = unnormalized_filter_trace(r, seq);
    for (Index k = 0; k < t.log_mass.size(); ++k) {
      CHECK(t.log_mass(k) - bound * static_cast<double>(k + 1) <= 1e-12);
      CHECK(std::abs(t.filter_mass(k) - 1.0) <= 1e-12);
      // prefix consistency: same accumulation as loglik on the prefix
      if (k % 15 == 0) CHECK(t.log_mass(k) == loglik(r, seq.head(k + 1)));
    }
  }
}

TEST_CASE("loglik depends on observation order") {
  const Model m = make_fixed_model(StateGrid::categorical(2), m2_matrix(), gaussian_ar(0.3));
  const double forward = loglik(m, make_observations({0.0, 2.0}));
  const double backward = loglik(m, make_observations({2.0, 0.0}));
  CHECK(forward == doctest::Approx(-3.1592076876091206).epsilon(1e-12));
  CHECK(backward == doctest::Approx(-3.5422858056113435).epsilon(1e-12));
  CHECK(forward != backward);
}
