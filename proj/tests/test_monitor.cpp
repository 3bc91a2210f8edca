/*!
 * This file is part of kpls.
 *
 * Copyright (c) 2026 kpls contributors
 * Distributed under the MIT license. See LICENSE for details.
 */
#include <catch2/catch_amalgamated.hpp>

#include "kpls/monitor.hpp"
#include "kpls/population.hpp"
#include "test_support.hpp"

using Catch::Matchers::WithinRel;

TEST_CASE("propagation primitives on hand values", "[monitor]") {
  CHECK_THAT(kpls::xi(1.0, 1.0, 0.1, 0.2), WithinRel(0.32, 1e-15));
  CHECK_THAT(kpls::xi_prime(1.0, 1.0, 0.1, 0.2), WithinRel(0.3, 1e-15));
  CHECK(kpls::xi(0.0, 0.0, 0.0, 0.0) == 0.0);

  const std::optional<double> z = kpls::zeta(2.0, 1.0);
  REQUIRE(z.has_value());
  CHECK(*z == 0.5);
  REQUIRE(kpls::zeta(3.0, 0.0).has_value());
  CHECK(*kpls::zeta(3.0, 0.0) == 0.0);
  CHECK_FALSE(kpls::zeta(1.0, 1.0).has_value());
  CHECK_FALSE(kpls::zeta(1.0, 2.0).has_value());
  CHECK_FALSE(kpls::zeta(0.0, 0.0).has_value());
}

TEST_CASE("propagation primitives reject negative inputs", "[monitor]") {
  CHECK_THROWS_AS(kpls::xi(-1.0, 1.0, 0.1, 0.1), kpls::ParameterError);
  CHECK_THROWS_AS(kpls::xi(1.0, 1.0, -0.1, 0.1), kpls::ParameterError);
  CHECK_THROWS_AS(kpls::xi_prime(1.0, -1.0, 0.1, 0.1), kpls::ParameterError);
  CHECK_THROWS_AS(kpls::xi_prime(1.0, 1.0, 0.1, -0.1), kpls::ParameterError);
  CHECK_THROWS_AS(kpls::zeta(1.0, -0.5), kpls::ParameterError);
}

TEST_CASE("xi dominates its first-order variant", "[monitor]") {
  kpls_test::Rng rng(51);
  for (int trial = 0; trial < 100; ++trial) {
    const double x = rng.uniform(0.0, 3.0);
    const double y = rng.uniform(0.0, 3.0);
    const double dx = rng.uniform(0.0, 1.0);
    const double dy = rng.uniform(0.0, 1.0);
    CHECK(kpls::xi(x, y, dx, dy) >= kpls::xi_prime(x, y, dx, dy));
  }
}

TEST_CASE("sampling-error scale matches frozen values", "[monitor]") {
  CHECK_THAT(kpls::epsilon_n(100), WithinRel(kpls_test::kEpsN100, 1e-15));
  CHECK_THAT(kpls::epsilon_n(8), WithinRel(kpls_test::kEpsN8, 1e-15));
  CHECK_THROWS_AS(kpls::epsilon_n(1), kpls::ParameterError);
  CHECK_THROWS_AS(kpls::epsilon_n(0), kpls::ParameterError);

  // The scale rises from n = 2 to its peak at n = 3, then falls.
  CHECK(kpls::epsilon_n(2) < kpls::epsilon_n(3));
  for (Eigen::Index n = 3; n < 60; ++n) {
    CHECK(kpls::epsilon_n(n) > kpls::epsilon_n(n + 1));
  }
}

TEST_CASE("initial state carries the base perturbations", "[monitor]") {
  const kpls::MonitorState s =
      kpls::monitor_init(0.5, kpls_test::kEpsN100);
  CHECK(s.m == 0);
  CHECK(s.defined);
  CHECK(s.delta_g == 0.0);
  CHECK(s.delta_u == kpls_test::kEpsN100);
  CHECK(s.delta_d == kpls_test::kEpsN100);
  CHECK_THAT(s.eps4, WithinRel(kpls_test::kEps04Single, 1e-14));
  CHECK_THROWS_AS(kpls::monitor_init(-0.1, 0.1), kpls::ParameterError);
  CHECK_THROWS_AS(kpls::monitor_init(0.1, -0.1), kpls::ParameterError);
}

TEST_CASE("zero base error keeps every bound at exactly zero", "[monitor]") {
  kpls_test::Rng rng(52);
  const kpls::Dataset data = kpls_test::random_dataset(rng, 30);
  const kpls::Rule1Result r = kpls::stopping_rule_1(
      data, kpls::KernelSpec::gaussian(0.7), 0.25, 5, 0.0);

  CHECK(r.chosen_m == 5);
  CHECK(r.cause == kpls::Rule1StopCause::reached_m_max);
  REQUIRE(r.monitor.size() == 6);
  for (const kpls::MonitorState& s : r.monitor) {
    CHECK(s.defined);
    CHECK(s.delta_g == 0.0);
    CHECK(s.delta_u == 0.0);
    CHECK(s.delta_d == 0.0);
    CHECK(s.eps4 == 0.0);
  }
}

TEST_CASE("an oversized base error exits at the first reciprocal",
          "[monitor]") {
  kpls_test::Rng rng(53);
  const kpls::Dataset data = kpls_test::random_dataset(rng, 20);
  const kpls::Rule1Result r = kpls::stopping_rule_1(
      data, kpls::KernelSpec::gaussian(0.7), 0.25, 10, 1e6);
  CHECK(r.chosen_m == 0);
  CHECK(r.cause == kpls::Rule1StopCause::monitor_exit);
  CHECK(r.g.coeffs.isZero(0.0));
  REQUIRE(r.monitor.size() == 2);
  CHECK_FALSE(r.monitor.back().defined);
}

TEST_CASE("an undefined state cannot be advanced", "[monitor]") {
  kpls::MonitorState dead;
  dead.defined = false;
  kpls::CgIteration it;
  it.alpha = 1.0;
  it.beta = 0.5;
  it.d_norm2 = 1.0;
  it.d_curvature = 1.0;
  CHECK_THROWS_AS(kpls::monitor_step(dead, it, 0.5), kpls::ParameterError);

  // A record whose loop body never ran still carries NaN scalars.
  kpls::MonitorState live = kpls::monitor_init(1.0, 0.1);
  kpls::CgIteration bare;
  CHECK_THROWS_AS(kpls::monitor_step(live, bare, 0.5),
                  kpls::ParameterError);
  CHECK_THROWS_AS(kpls::monitor_step(live, it, -1.0), kpls::ParameterError);
}

TEST_CASE("accumulated bounds never shrink", "[monitor]") {
  kpls_test::Rng rng(48);
  const kpls::Dataset data = kpls_test::random_dataset(rng, 30);
  const kpls::OperatorContext ctx = kpls::OperatorContext::empirical(
      kpls::gram_matrix(kpls::KernelSpec::gaussian(0.7), data.x));
  const kpls::Rule1Result r =
      kpls::stopping_rule_1(ctx, data.y, 30, 0.25, 5, 1e-6);

  REQUIRE(r.monitor.size() >= 3);
  for (std::size_t i = 1; i < r.monitor.size(); ++i) {
    if (!r.monitor[i].defined) break;
    CHECK(r.monitor[i].delta_g >= r.monitor[i - 1].delta_g);
    CHECK(r.monitor[i].delta_u >= r.monitor[i - 1].delta_u);
    CHECK(r.monitor[i].delta_d >= r.monitor[i - 1].delta_d);
  }
}

TEST_CASE("rule 1 validates its rate exponent", "[monitor]") {
  kpls_test::Rng rng(54);
  const kpls::Dataset data = kpls_test::random_dataset(rng, 10);
  const kpls::KernelSpec spec = kpls::KernelSpec::gaussian(0.7);
  CHECK_THROWS_AS(kpls::stopping_rule_1(data, spec, 0.0),
                  kpls::ParameterError);
  CHECK_THROWS_AS(kpls::stopping_rule_1(data, spec, 0.5),
                  kpls::ParameterError);
  CHECK_THROWS_AS(kpls::stopping_rule_1(data, spec, -0.2),
                  kpls::ParameterError);
  CHECK_THROWS_AS(kpls::stopping_rule_1(data, spec, 0.25, 0, -1.0),
                  kpls::ParameterError);
}

TEST_CASE("the bound itself can end the run", "[monitor]") {
  // A large rate with a small base error keeps the reciprocals defined while
  // the threshold n^-gamma shrinks enough for delta_g to cross it.
  kpls_test::Rng rng(47);
  const kpls::Dataset data = kpls_test::random_dataset(rng, 30);
  const kpls::OperatorContext ctx = kpls::OperatorContext::empirical(
      kpls::gram_matrix(kpls::KernelSpec::gaussian(0.7), data.x));
  const kpls::Rule1Result r =
      kpls::stopping_rule_1(ctx, data.y, 100000000, 0.45, 10, 1e-7);

  CHECK(r.cause == kpls::Rule1StopCause::bound_exceeded);
  CHECK(r.chosen_m == 1);
  CHECK_THAT(r.threshold, WithinRel(0.00025118864315095795, 1e-14));
  REQUIRE(r.monitor.size() == 3);
  CHECK(r.monitor[1].delta_g <= r.threshold);
  CHECK(r.monitor[2].defined);
  CHECK(r.monitor[2].delta_g > r.threshold);
  // The estimate is the last iterate whose bound still held.
  CHECK((r.g.coeffs - r.trace.iterations[1].g.coeffs)
            .cwiseAbs()
            .maxCoeff() == 0.0);
}

TEST_CASE("a recursion exit is reported as such", "[monitor]") {
  Eigen::MatrixXd x(3, 1);
  x << -1.0, 0.0, 1.0;
  Eigen::VectorXd y(3);
  y << 0.3, -0.5, 0.4;
  const kpls::Dataset data = kpls::preprocess(x, y);
  // Zero base error keeps the monitor alive until the recursion saturates.
  const kpls::Rule1Result r = kpls::stopping_rule_1(
      data, kpls::KernelSpec::gaussian(0.6), 0.25, 20, 0.0);
  CHECK(r.cause == kpls::Rule1StopCause::cg_exit);
  CHECK(r.trace.exit_reason == kpls::ExitReason::exact_fit);
  CHECK(r.chosen_m == r.trace.steps());
}

TEST_CASE("default-model sample at n = 400 stops at zero", "[monitor]") {
  const kpls::PopulationModel model = kpls::default_oracle_model();
  const kpls::Dataset data = kpls::sample(model, 400, 2026);
  const kpls::Rule1Result r =
      kpls::stopping_rule_1(data, model.kernel, 0.25);
  CHECK(r.chosen_m == 0);
  CHECK(r.cause == kpls::Rule1StopCause::monitor_exit);
  CHECK(r.g.coeffs.isZero(0.0));
}
