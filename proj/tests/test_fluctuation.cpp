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
#include "epiflux/fluctuation.hpp"
#include "epiflux/stats.hpp"
#include "test_models.hpp"

using namespace epiflux;

namespace {

// Exact second moments of hF for Model B in the dt -> 0 limit (Richardson
// extrapolation of the discrete moments at dt = 0.05/16 and 0.05/32).
constexpr double kVarB2 = 1.086655;
constexpr double kVarB5 = 3.335285;
constexpr double kVarB8 = 2.433527;

std::vector<TestFunctional> with_extras(const ModelSpec& m) {
  auto fs = fluctuation_functionals(m);
  fs.push_back(TestFunctional::constant(m.num_traits(), 1.0));
  fs.push_back(TestFunctional::uniform("phi", AgeFunction::exp_decay(1.0, 0.5), m.num_traits()));
  return fs;
}

}  // namespace

TEST_CASE("homogeneous system stays at zero") {
  const auto m = testmodels::model(testmodels::kModelC);
  const auto l = testmodels::lln(m);
  const auto s = solve_fluctuation(m, l, Eigen::MatrixXd::Zero(3, l.grid.steps + 1));
  CHECK(s.hF.cwiseAbs().maxCoeff() == 0.0);
  CHECK(s.hS.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("constant infectivity has no force fluctuation") {
  const auto m = testmodels::model(testmodels::kModelA);
  const auto l = testmodels::lln(m);
  const auto b = sample_gaussian(m, l, fluctuation_functionals(m), {}, 5, 3);
  for (int r = 0; r < 5; ++r) {
    const auto s = solve_fluctuation(m, l, b, r);
    CHECK(s.hF.cwiseAbs().maxCoeff() < 1e-8 + s.budget);
  }
  const auto mo = fluctuation_moments(m, l, {2.0, 5.0}, 50, 4);
  CHECK(mo.cov_hF.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("linearity and superposition") {
  const auto m = testmodels::model(testmodels::kModelC);
  const auto l = testmodels::lln(m);
  const auto b = sample_gaussian(m, l, fluctuation_functionals(m), {}, 2, 6);
  const auto s0 = solve_fluctuation(m, l, b, 0), s1 = solve_fluctuation(m, l, b, 1);
  const auto d = solve_fluctuation(m, l, b.scaled(2.0), 0);
  CHECK(d.hF == 2.0 * s0.hF);
  CHECK(d.hS == 2.0 * s0.hS);

  const int K = l.grid.steps + 1;
  Eigen::MatrixXd n0(3, K), n1(3, K);
  for (int f = 0; f < 3; ++f)
    for (int k = 0; k < K; ++k) {
      n0(f, k) = b.combined(0, f, k);
      n1(f, k) = b.combined(1, f, k);
    }
  const auto sum = solve_fluctuation(m, l, Eigen::MatrixXd(n0 + n1));
  const double scale = s0.hF.cwiseAbs().maxCoeff() + s1.hF.cwiseAbs().maxCoeff();
  CHECK((sum.hF - s0.hF - s1.hF).cwiseAbs().maxCoeff() < 1e-13 * scale);
  CHECK((sum.hS - s0.hS - s1.hS).cwiseAbs().maxCoeff() < 1e-13 * scale);
}

TEST_CASE("functional reconstruction") {
  for (const char* text : {testmodels::kModelB, testmodels::kModelC}) {
    const auto m = testmodels::model(text);
    const auto l = testmodels::lln(m);
    const auto fs = with_extras(m);
    const auto one = fs[fs.size() - 2];
    const auto b = sample_gaussian(m, l, fs, {}, 2, 13);
    for (int r = 0; r < 2; ++r) {
      const auto s = solve_fluctuation(m, l, b, r);
      for (int k = 0; k <= l.grid.steps; k += 7) {
        const double t = l.t[k];
        CHECK(std::abs(hat_u_functional(m, l, s, b, r, one, t)) < 10 * s.budget);
        CHECK(hat_u_functional(m, l, s, b, r, fs[0], t) == doctest::Approx(s.hF[k]).epsilon(1e-12));
        for (int j = 0; j < m.num_traits(); ++j)
          CHECK(hat_u_functional(m, l, s, b, r, fs[1 + j], t) ==
                doctest::Approx(s.hS(k, j)).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("solver input errors") {
  const auto m = testmodels::model(testmodels::kModelB);
  const auto l = testmodels::lln(m, 4.0);
  const auto b = sample_gaussian(m, l, fluctuation_functionals(m), {}, 1, 1);
  const auto s = solve_fluctuation(m, l, b, 0);
  const auto phi = TestFunctional::uniform("other", AgeFunction::constant(1.0), 1);
  CHECK_THROWS_AS(hat_u_functional(m, l, s, b, 0, phi, 1.0), MissingFunctional);
  const auto partial = sample_gaussian(m, l, fluctuation_functionals(m), {1.0, 2.0}, 1, 1);
  CHECK_THROWS_AS(solve_fluctuation(m, l, partial, 0), GridMismatch);
  const auto wrong = sample_gaussian(m, l, {phi}, {}, 1, 1);
  CHECK_THROWS_AS(solve_fluctuation(m, l, wrong, 0), GridMismatch);
}

TEST_CASE("exact moments against the frozen limit values") {
  const auto m = testmodels::model(testmodels::kModelB);
  const auto l = testmodels::lln(m);
  const auto ex = fluctuation_moments_exact(m, l, {2.0, 5.0, 8.0});
  const double dt2 = 0.05 * 0.05;
  CHECK(std::abs(ex.cov_hF(0, 0) - kVarB2) < 5 * dt2);
  CHECK(std::abs(ex.cov_hF(1, 1) - kVarB5) < 5 * dt2);
  CHECK(std::abs(ex.cov_hF(2, 2) - kVarB8) < 5 * dt2);
  CHECK(ex.cov_hF(0, 1) == doctest::Approx(ex.cov_hF(1, 0)));
}

TEST_CASE("refinement order of Var hF") {
  const auto m = testmodels::model(testmodels::kModelB2);
  double prev = 0, dprev = 0;
  for (double dt : {0.1, 0.05, 0.025, 0.0125}) {
    const auto l = testmodels::lln(m, 8.0, dt);
    const double cur = fluctuation_moments_exact(m, l, {5.0}).cov_hF(0, 0);
    const double d = cur - prev;
    if (dprev != 0.0) CHECK(std::log2(std::abs(dprev / d)) >= 1.5);
    if (prev != 0.0) dprev = d;
    prev = cur;
  }
}

TEST_CASE("Monte Carlo moments agree with the exact tables") {
  const auto m = testmodels::model(testmodels::kModelC);
  const auto l = testmodels::lln(m);
  const std::vector<double> ts{2.0, 6.0};
  const auto ex = fluctuation_moments_exact(m, l, ts);
  const auto mc = fluctuation_moments(m, l, ts, 1200, 3);
  for (int i = 0; i < 2; ++i) {
    for (int k = 0; k < 2; ++k) CHECK(std::abs(mc.cov_hF(i, k) - ex.cov_hF(i, k)) < 4 * mc.se_hF(i, k));
    for (int j = 0; j < 2; ++j) CHECK(std::abs(mc.var_hS(i, j) - ex.var_hS(i, j)) < 4 * mc.se_hS(i, j));
  }
}

TEST_CASE("standard errors shrink like 1/sqrt(n)") {
  const auto m = testmodels::model(testmodels::kModelB);
  const auto l = testmodels::lln(m, 5.0);
  const auto a = fluctuation_moments(m, l, {5.0}, 400, 1);
  const auto b = fluctuation_moments(m, l, {5.0}, 1600, 2);
  const double ratio = a.se_hF(0, 0) / b.se_hF(0, 0);
  CHECK(ratio > 1.6);
  CHECK(ratio < 2.4);
}

TEST_CASE("initial noise block decouples") {
  const auto m = testmodels::model(testmodels::kModelB);
  const auto l = testmodels::lln(m, 5.0);
  auto fs = fluctuation_functionals(m);
  fs.push_back(TestFunctional::uniform("phi", AgeFunction::exp_decay(1.0, 0.5), 1));
  const int n = 1000;
  auto b = sample_gaussian(m, l, fs, {}, n, 44);
  const Eigen::VectorXd init = b.M[0].col(2 * b.num_times() + 40);  // M01(phi) at t = 2
  b.M[0].setZero();
  Eigen::VectorXd hf(n);
  for (int r = 0; r < n; ++r) hf[r] = solve_fluctuation(m, l, b, r).hF[l.grid.steps];
  const auto c = stats::covariance(hf, init);
  CHECK(std::abs(c.cov) < 4 * c.se);
}
