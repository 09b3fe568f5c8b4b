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

#include <boost/math/quadrature/gauss.hpp>

#include "epiflux/errors.hpp"
#include "epiflux/lln.hpp"
#include "test_models.hpp"

using namespace epiflux;

namespace {

// Reference values of F for Model B: two solves at dt = 0.05/16 and 0.05/32
// combined by Richardson extrapolation (the scheme is second order).
constexpr double kFB1 = 0.2645212;
constexpr double kFB2 = 0.1691809;
constexpr double kFB5 = 0.5034102;

// int_0^inf u_t(a, j) da nu(dj), cell-aligned Gauss-Legendre pieces
double total_mass(const LlnSolution& l, const ModelSpec& m, double t, double amax) {
  double tot = 0.0;
  const double h = l.grid.h;
  for (int j = 0; j < m.num_traits(); ++j)
    for (double x = 0.0; x < amax; x += h) {
      auto f = [&](double a) { return density(l, m, t, a, j); };
      // split at a = t where the two branches meet
      if (t > x && t < x + h)
        tot += m.traits.weights[j] * (boost::math::quadrature::gauss<double, 7>::integrate(f, x, t) +
                                      boost::math::quadrature::gauss<double, 7>::integrate(f, t, x + h));
      else
        tot += m.traits.weights[j] * boost::math::quadrature::gauss<double, 7>::integrate(f, x, x + h);
    }
  return tot;
}

}  // namespace

TEST_CASE("constant infectivity is an exact fixed point") {
  const auto m = testmodels::model(testmodels::kModelA);
  const auto l = testmodels::lln(m, 10.0);
  CHECK((l.F.array() - 0.5).abs().maxCoeff() < 1e-10);
  CHECK((l.S.array() - 1.0).abs().maxCoeff() < 1e-10);
  CHECK(lln_residual(l, m).max() < 1e-12);
}

TEST_CASE("without susceptibility F is transported initial infectivity") {
  const auto m = testmodels::model(testmodels::kGammaZero);
  const auto l = testmodels::lln(m, 4.0);
  for (int k = 0; k <= l.grid.steps; ++k) {
    const double t = l.t[k];
    const double exact = t < 1.0 ? 2.0 * (1.0 - std::exp(-(1.0 - t))) : 0.0;
    CHECK(std::abs(l.F[k] - exact) < 1e-8);
  }
  CHECK(l.S.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("Model B against the refined reference") {
  const auto m = testmodels::model(testmodels::kModelB);
  const double dt = 0.05;
  const auto l = testmodels::lln(m, 8.0, dt);
  CHECK(std::abs(interp_F(l, 1.0) - kFB1) < 5 * dt * dt);
  CHECK(std::abs(interp_F(l, 2.0) - kFB2) < 5 * dt * dt);
  CHECK(std::abs(interp_F(l, 5.0) - kFB5) < 5 * dt * dt);
  // the constant in front of dt^2 is in fact far smaller
  CHECK(std::abs(interp_F(l, 5.0) - kFB5) < 0.05 * dt * dt);
  CHECK(lln_residual(l, m).max() < 1e-8);
}

TEST_CASE("Model B reference from a live refinement") {
  const auto m = testmodels::model(testmodels::kModelB);
  const auto fine = testmodels::lln(m, 5.0, 0.05 / 16);
  const auto finer = testmodels::lln(m, 5.0, 0.05 / 32);
  const double rich = (4 * interp_F(finer, 5.0) - interp_F(fine, 5.0)) / 3;
  CHECK(rich == doctest::Approx(kFB5).epsilon(2e-7));
}

TEST_CASE("refinement order of F") {
  const auto m = testmodels::model(testmodels::kModelB);
  double prev = 0, dprev = 0;
  for (double dt : {0.1, 0.05, 0.025, 0.0125}) {
    const auto l = testmodels::lln(m, 8.0, dt);
    const double cur = interp_F(l, 5.0), d = cur - prev;
    if (dprev != 0.0) CHECK(std::log2(std::abs(dprev / d)) >= 1.8);
    if (prev != 0.0) dprev = d;
    prev = cur;
  }
}

TEST_CASE("identical traits collapse to the one-trait model") {
  const auto b = testmodels::lln(testmodels::model(testmodels::kModelB));
  const auto b2 = testmodels::lln(testmodels::model(testmodels::kModelB2));
  CHECK((b.F - b2.F).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("bounds along the solution") {
  for (const char* text : {testmodels::kModelB, testmodels::kModelB2, testmodels::kModelC}) {
    const auto m = testmodels::model(text);
    const auto l = testmodels::lln(m);
    CHECK(l.F.maxCoeff() <= m.lambda_star);
    CHECK((l.S * m.traits.weights).maxCoeff() <= 1.0 + 1e-12);
    CHECK(lln_residual(l, m).max() < 1e-8);
  }
}

TEST_CASE("cohort masses stay a probability") {
  const auto m = testmodels::model(testmodels::kModelC);
  const auto l = testmodels::lln(m);
  const auto p = replay_cohorts(l, m);
  for (const auto& mass : p.mass) CHECK(mass.sum() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("residual detects a corrupted table") {
  const auto m = testmodels::model(testmodels::kModelB);
  auto l = testmodels::lln(m);
  l.F[60] += 0.01;
  CHECK(lln_residual(l, m).max() >= 0.005);
}

TEST_CASE("density: closed forms") {
  const auto a = testmodels::model(testmodels::kModelA);
  const auto la = testmodels::lln(a);
  CHECK(std::abs(density(la, a, 5.0, 1.0, 0) - 0.5 * std::exp(-0.5)) < 1e-6);

  const auto z = testmodels::model(testmodels::kGammaZero);
  const auto lz = testmodels::lln(z, 4.0);
  for (double x : {3.1, 4.5, 7.0}) CHECK(density(lz, z, 3.0, x, 0) == std::exp(-(x - 3.0)));
}

TEST_CASE("density integrates to one") {
  const auto a = testmodels::model(testmodels::kModelA);
  const auto la = testmodels::lln(a);
  for (double t : {0.0, 4.0, 8.0}) CHECK(std::abs(total_mass(la, a, t, 40.0) - 1.0) < 1e-6);

  // discontinuous coefficients: the continuous density carries an O(dt^2)
  // mass defect, so this check runs on a fine grid
  const auto b = testmodels::model(testmodels::kModelB);
  const auto lb = testmodels::lln(b, 8.0, 0.005);
  for (double t : {0.0, 4.0, 8.0}) CHECK(std::abs(total_mass(lb, b, t, 30.0) - 1.0) < 1e-6);
}

TEST_CASE("solver errors") {
  const auto m = testmodels::model(testmodels::kModelB);
  LlnOptions o;
  o.horizon = 4.0;
  o.max_iters = 1;
  CHECK_THROWS_AS(solve_lln(m, o), NonConvergence);
  const auto l = testmodels::lln(m, 4.0);
  CHECK_THROWS_AS(interp_F(l, 4.5), GridError);
  o.dt = 0;
  CHECK_THROWS_AS(solve_lln(m, o), GridError);
}
