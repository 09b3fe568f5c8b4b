/*
 * Copyright 2026 The epiflux Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <doctest.h>

#include <cmath>

#include "epiflux/errors.hpp"
#include "epiflux/stats.hpp"
#include "epiflux/verification.hpp"
#include "test_models.hpp"

using namespace epiflux;

TEST_CASE("Kolmogorov tail and KS statistic") {
  // 5% and 1% critical values of the limiting distribution
  CHECK(stats::kolmogorov_sf(1.3581) == doctest::Approx(0.05).epsilon(1e-3));
  CHECK(stats::kolmogorov_sf(1.6276) == doctest::Approx(0.01).epsilon(2e-3));
  CHECK(stats::kolmogorov_sf(0.0) == 1.0);
  // both branches of the series agree where they meet
  CHECK(stats::kolmogorov_sf(0.2999) == doctest::Approx(stats::kolmogorov_sf(0.3001)).epsilon(1e-6));

  Rng rng(4);
  Eigen::VectorXd x(2000);
  for (auto& v : x) v = 2.0 + 3.0 * rng.normal();
  CHECK(stats::ks_normal(x, 2.0, 9.0).p > 0.01);
  CHECK(stats::ks_normal(x, 0.0, 9.0).p < 1e-6);
}

TEST_CASE("line fit and chi-square") {
  Eigen::VectorXd x(4), y(4);
  x << 1, 2, 3, 4;
  y << 3, 5, 7, 9;
  const auto f = stats::fit_line(x, y);
  CHECK(f.slope == doctest::Approx(2.0));
  CHECK(f.intercept == doctest::Approx(1.0));
  const auto c = stats::chi_square({50, 50}, {0.5, 0.5});
  CHECK(c.stat == 0.0);
  CHECK(c.p == doctest::Approx(1.0));
  CHECK(stats::chi_square({90, 10}, {0.5, 0.5}).p < 1e-10);
}

TEST_CASE("replica seeds are fixed") {
  CHECK(replica_seed(1, 2000, 0) == replica_seed(1, 2000, 0));
  CHECK(replica_seed(1, 2000, 0) != replica_seed(1, 2000, 1));
  CHECK(replica_seed(1, 2000, 0) != replica_seed(1, 1000, 0));
  // the derivation is part of the file format contract
  CHECK(sub_seed(0, 0) == splitmix64(splitmix64(0)));
}

TEST_CASE("convergence study: constant infectivity is degenerate") {
  const auto m = testmodels::model(testmodels::kModelA);
  const auto l = testmodels::lln(m);
  const auto r = lln_convergence(m, l, {100, 200, 400}, 3, 8.0, 1);
  CHECK(r.degenerate);
  CHECK(r.reason == "degenerate: constant λ");
  CHECK(r.mean_err.maxCoeff() < 1e-12);
}

TEST_CASE("convergence study: pure transport has the sqrt(N) rate") {
  const auto m = testmodels::model(testmodels::kGammaZero);
  const auto l = testmodels::lln(m);
  const auto r = lln_convergence(m, l, {250, 500, 1000, 2000, 4000}, 20, 8.0, 2);
  CHECK_FALSE(r.degenerate);
  CHECK(r.slope >= -0.65);
  CHECK(r.slope <= -0.35);
  CHECK(r.pass);
}

TEST_CASE("CLT check flags the degenerate model") {
  const auto m = testmodels::model(testmodels::kModelA);
  const auto l = testmodels::lln(m);
  const auto mo = fluctuation_moments_exact(m, l, {2.0, 5.0});
  const auto r = clt_check(m, l, mo, 200, 100, 3);
  CHECK(r.degenerate);
  CHECK(r.samples.cwiseAbs().maxCoeff() < 1e-10);
  CHECK_THROWS_AS(clt_check(m, l, mo, 200, 50, 3), ConfigError);
}

TEST_CASE("quadratic variation: trivial cases") {
  const auto b = testmodels::model(testmodels::kModelB);
  SimOptions o;
  const auto s = simulate(b, 300, 4.0, o, 5);
  const auto one = TestFunctional::constant(1, 2.0);
  const auto q = qv_check(s, b, one, 200);
  CHECK(q.realized == 0.0);
  CHECK(q.compensator == 0.0);

  const auto z = testmodels::model(testmodels::kGammaZero);
  const auto sz = simulate(z, 300, 4.0, o, 5);
  const auto qz = qv_check(sz, z, TestFunctional::lambda(z), 200);
  CHECK(qz.realized == 0.0);
  CHECK(qz.compensator == 0.0);

  o.keep_events = false;
  const auto nolog = simulate(b, 300, 4.0, o, 5);
  CHECK_THROWS_AS(qv_check(nolog, b, one), EventLogMissing);
}

TEST_CASE("quadratic variation on one Model B run") {
  const auto m = testmodels::model(testmodels::kModelB);
  SimOptions o;
  const auto s = simulate(m, 2000, 8.0, o, 6);
  const auto q = qv_check(s, m, TestFunctional::lambda(m));
  CHECK(q.realized > 0.0);
  CHECK(q.ratio >= 0.8);
  CHECK(q.ratio <= 1.25);
  CHECK(std::abs(q.z) < 5.0);
}

TEST_CASE("coupling check") {
  const auto a = testmodels::model(testmodels::kModelA);
  const auto la = testmodels::lln(a);
  const auto ra = coupling_check(a, la, 300, 3, 5.0, 1);
  CHECK(ra.mean_A() == 0.0);
  CHECK(ra.mean_a() == 0.0);

  const auto b = testmodels::model(testmodels::kModelB);
  const auto lb = testmodels::lln(b);
  const auto rb = coupling_check(b, lb, 500, 5, 8.0, 1);
  CHECK(rb.all_below);
  CHECK(rb.mean_A() > 0.0);
  CHECK(rb.bound_A == doctest::Approx(2.0 / std::sqrt(500.0) * 8.0 * std::exp(64.0)));
}
