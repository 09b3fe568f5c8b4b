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

#include <algorithm>
#include <cmath>

#include "epiflux/errors.hpp"
#include "epiflux/lln.hpp"
#include "epiflux/pdmp.hpp"
#include "epiflux/stats.hpp"
#include "test_models.hpp"

using namespace epiflux;

namespace {

std::vector<double> grid(double T, double dt) {
  std::vector<double> g;
  for (int k = 0; k * dt <= T + 1e-12; ++k) g.push_back(k * dt);
  return g;
}

}  // namespace

TEST_CASE("no susceptibility: no events, ages drift") {
  const auto m = testmodels::model(testmodels::kGammaZero);
  SimOptions o;
  o.snapshot_times = grid(5.0, 0.5);
  const auto s = simulate(m, 500, 5.0, o, 3);
  CHECK(s.events.empty());
  CHECK(s.accepted == 0);
  for (int k = 0; k < 500; ++k) CHECK(s.final_state.age[k] == s.initial[k].age + 5.0);
}

TEST_CASE("constant infectivity keeps F^N at 0.5 exactly") {
  const auto m = testmodels::model(testmodels::kModelA);
  SimOptions o;
  o.snapshot_times = grid(10.0, 0.25);
  o.keep_events = false;
  const int N = 10000;
  const auto s = simulate(m, N, 10.0, o, 17);
  for (int i = 0; i < s.F_emp.size(); ++i) CHECK(s.F_emp[i] == 0.5);
  double mean = 0.0;
  for (long a : s.final_state.reinfections) mean += a;
  mean /= N;
  CHECK(std::abs(mean - 5.0) < 3 * std::sqrt(5.0 / N));
}

TEST_CASE("acceptance count matches the summed acceptance probabilities") {
  const auto m = testmodels::model(testmodels::kModelB);
  SimOptions o;
  o.keep_events = false;
  const auto s = simulate(m, 2000, 8.0, o, 5);
  REQUIRE(s.candidates > 0);
  const double se = std::sqrt(s.accept_prob_var);
  CHECK(std::abs(static_cast<double>(s.accepted) - s.accept_prob_sum) < 3 * se);
}

TEST_CASE("force of infection and susceptibility of a state") {
  const char* text = R"(
[lambda]
family = tabulated
ages = 0 1
values = 0 1
tail = constant
[gamma]
family = constant
value = 1
[initial]
age_family = exponential
rate = 1
[bounds]
lambda_star = 1
)";
  const auto m = testmodels::model(text);
  PopulationState st;
  st.age = {0.5, 2.0};
  st.trait = {0, 0};
  st.reinfections = {0, 0};
  CHECK(force_of_infection(m, st) == doctest::Approx(0.75));
  CHECK(mean_susceptibility(m, st)[0] == 1.0);

  const auto z = testmodels::model(testmodels::kGammaZero);
  CHECK(mean_susceptibility(z, st)[0] == 0.0);
  const auto a = testmodels::model(testmodels::kModelA);
  CHECK(force_of_infection(a, st) == 0.5);
}

TEST_CASE("snapshot invariants on a two-trait run") {
  const auto m = testmodels::model(testmodels::kModelC);
  SimOptions o;
  o.snapshot_times = grid(6.0, 0.1);
  o.hist_edges = {0, 1, 2, 4};
  const auto s = simulate(m, 800, 6.0, o, 23);
  for (int i = 0; i < s.F_emp.size(); ++i) {
    CHECK(s.F_emp[i] <= m.lambda_star);
    CHECK(s.S_emp.row(i).dot(m.traits.weights) <= 1.0 + 1e-12);
    CHECK(s.age_hist.row(i).sum() == doctest::Approx(1.0));
  }
  CHECK(s.final_state.size() == 800);
  CHECK(s.accept_prob_sum <= static_cast<double>(s.candidates));
  // events are time ordered and each moves one individual to age 0
  for (std::size_t e = 1; e < s.events.size(); ++e) CHECK(s.events[e].time >= s.events[e - 1].time);
}

TEST_CASE("identical seeds reproduce the event log") {
  const auto m = testmodels::model(testmodels::kModelB2);
  SimOptions o;
  o.snapshot_times = grid(4.0, 0.5);
  const auto a = simulate(m, 300, 4.0, o, 99), b = simulate(m, 300, 4.0, o, 99);
  REQUIRE(a.events.size() == b.events.size());
  for (std::size_t e = 0; e < a.events.size(); ++e) {
    CHECK(a.events[e].time == b.events[e].time);
    CHECK(a.events[e].k == b.events[e].k);
    CHECK(a.events[e].trait_after == b.events[e].trait_after);
  }
  CHECK(a.F_emp == b.F_emp);
  const auto c = simulate(m, 300, 4.0, o, 100);
  CHECK(c.F_emp != a.F_emp);
}

TEST_CASE("incremental force of infection agrees with recomputation") {
  const auto m = testmodels::model(testmodels::kModelB);
  SimOptions o;
  o.snapshot_times = grid(8.0, 0.05);
  auto inc = o;
  inc.incremental = true;
  const auto a = simulate(m, 1000, 8.0, o, 4), b = simulate(m, 1000, 8.0, inc, 4);
  REQUIRE(a.events.size() == b.events.size());
  for (std::size_t e = 0; e < a.events.size(); ++e) CHECK(a.events[e].time == b.events[e].time);
  CHECK((a.F_emp - b.F_emp).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("limit individual without susceptibility never jumps") {
  const auto m = testmodels::model(testmodels::kGammaZero);
  const auto l = testmodels::lln(m, 5.0);
  Rng rng(1);
  const auto p = limit_individual(m, l, 5.0, rng, Individual{0.7, 0});
  CHECK(p.count == 0);
  CHECK(p.final_age == doctest::Approx(5.7).epsilon(1e-14));
}

TEST_CASE("limit individual under constant rate is Poisson") {
  const auto m = testmodels::model(testmodels::kModelA);
  const auto l = testmodels::lln(m, 10.0);
  Rng rng(2);
  const int n = 10000;
  double mean = 0.0;
  for (int i = 0; i < n; ++i) mean += limit_individual(m, l, 10.0, rng).count;
  mean /= n;
  CHECK(std::abs(mean - 5.0) < 3 * std::sqrt(5.0 / n));
}

TEST_CASE("first jump of a limit individual follows F gamma") {
  const auto m = testmodels::model(testmodels::kModelB);
  const double T = 8.0, a0 = 1.5;
  const auto l = testmodels::lln(m, T);
  const double total = 1.0 - std::exp(-exposure(l, m, 0, a0, 0.0, T));
  Rng rng(8);
  std::vector<double> u;
  for (int i = 0; i < 10000; ++i) {
    const auto p = limit_individual(m, l, T, rng, Individual{a0, 0});
    if (p.jumps.empty()) continue;
    const double t = p.jumps.front().time;
    u.push_back((1.0 - std::exp(-exposure(l, m, 0, a0, 0.0, t))) / total);
  }
  std::sort(u.begin(), u.end());
  const double n = static_cast<double>(u.size());
  double D = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) D = std::max({D, (i + 1) / n - u[i], u[i] - i / n});
  CHECK(stats::kolmogorov_sf(std::sqrt(n) * D) > 0.01);
}

TEST_CASE("coupling is exact for constant rates and without susceptibility") {
  for (const char* text : {testmodels::kModelA, testmodels::kGammaZero}) {
    const auto m = testmodels::model(text);
    const auto l = testmodels::lln(m, 5.0);
    const auto c = simulate_coupled(m, l, 400, 5.0, 12);
    CHECK(c.mean_dA() == 0.0);
    CHECK(c.mean_da() == 0.0);
  }
}

TEST_CASE("coupled counters on Model B stay below the bound") {
  const auto m = testmodels::model(testmodels::kModelB);
  const double T = 8.0;
  const auto l = testmodels::lln(m, T);
  const int N = 1000;
  const double bound = m.lambda_star / std::sqrt(N) * T * std::exp(4 * T * m.lambda_star * m.kappa_bar);
  double mean = 0.0;
  for (int r = 0; r < 50; ++r) mean += simulate_coupled(m, l, N, T, 1000 + r).mean_dA();
  mean /= 50;
  CHECK(mean > 0.0);
  CHECK(mean < bound);
}
