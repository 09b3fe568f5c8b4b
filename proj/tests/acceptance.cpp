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

// Acceptance run: one PASS/FAIL line per criterion, desk-scale sizes.
// Exit status is nonzero only for failures that are not known deviations.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include "epiflux/fluctuation.hpp"
#include "epiflux/gaussian.hpp"
#include "epiflux/lln.hpp"
#include "epiflux/pdmp.hpp"
#include "epiflux/stats.hpp"
#include "epiflux/verification.hpp"
#include "test_models.hpp"

using namespace epiflux;
using testmodels::lln;
using testmodels::model;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
  bool known_only = false;  // every failing part is the documented deviation
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

const std::vector<const char*> kAllModels{testmodels::kModelA, testmodels::kModelB,
                                           testmodels::kModelB2, testmodels::kModelC,
                                           testmodels::kGammaZero};
const char* kNames[] = {"A", "B", "B2", "C", "gamma0"};

// --- 1: constant infectivity -------------------------------------------------
Outcome exactness() {
  const auto m = model(testmodels::kModelA);
  const auto l = lln(m);
  SimOptions o;
  for (int k = 0; k <= 80; ++k) o.snapshot_times.push_back(0.1 * k);
  bool sim_ok = true;
  for (int r = 0; r < 3; ++r) {
    const auto s = simulate(m, 1000, 8.0, o, replica_seed(1, 1000, r));
    sim_ok = sim_ok && (s.F_emp.array() == 0.5).all() && !s.events.empty();
  }
  const double dF = (l.F.array() - 0.5).abs().maxCoeff();
  const double dS = (l.S.array() - 1.0).abs().maxCoeff();
  const auto b = sample_gaussian(m, l, fluctuation_functionals(m), {}, 20, 1);
  double hF = 0.0;
  for (int r = 0; r < 20; ++r) hF = std::max(hF, solve_fluctuation(m, l, b, r).hF.cwiseAbs().maxCoeff());
  const auto c = coupling_check(m, l, 500, 3, 8.0, 1);
  const bool ok = sim_ok && dF < 1e-10 && dS < 1e-10 && hF < 1e-8 && c.mean_A() == 0.0 &&
                  c.mean_a() == 0.0;
  return {ok, std::string("F^N==0.5 ") + (sim_ok ? "yes" : "no") + ", |F-0.5| " + fmt("%.1e", dF) +
                  ", |S-1| " + fmt("%.1e", dS) + ", |hF| " + fmt("%.1e", hF) +
                  ", coupling " + fmt("%g", c.mean_A() + c.mean_a())};
}

// --- 2: LLN rate ------------------------------------------------------------
Outcome lln_rate() {
  std::string d;
  bool ok = true;
  VerifyOptions vo;
  vo.incremental = true;
  for (const char* text : {testmodels::kModelB, testmodels::kModelB2}) {
    const auto m = model(text);
    const auto l = lln(m);
    const auto r = lln_convergence(m, l, {250, 500, 1000, 2000, 4000}, 20, 8.0, 1, vo);
    ok = ok && r.pass;
    d += std::string(d.empty() ? "" : ", ") + (m.num_traits() == 1 ? "B" : "B2") + " slope " +
         fmt("%.3f", r.slope);
  }
  return {ok, d + " (accept [-0.65, -0.35])"};
}

// --- 3: FCLT marginals --------------------------------------------------------
Outcome fclt() {
  const auto m = model(testmodels::kModelB);
  const auto l = lln(m);
  const auto mo = fluctuation_moments(m, l, {2.0, 5.0, 8.0}, 2000, 1);
  VerifyOptions vo;
  vo.incremental = true;
  const auto r = clt_check(m, l, mo, 2000, 500, 1, vo);
  bool ok = !r.degenerate;
  std::string d;
  for (std::size_t i = 0; i < r.times.size(); ++i) {
    ok = ok && r.pass[i];
    d += fmt("t=%g", r.times[i]) + fmt(" p %.3f", r.ks_p[i]) + fmt(" ratio %.3f; ", r.ratio[i]);
  }
  return {ok, d + "accept p > 0.01, ratio in [0.8, 1.25]"};
}

// --- 4: noise covariances ---------------------------------------------------
Outcome noise() {
  const auto m = model(testmodels::kModelB2);
  const auto l = lln(m);
  const std::vector<TestFunctional> fs{
      TestFunctional::uniform("phi", AgeFunction::exp_decay(1.0, 0.5), 2),
      TestFunctional::uniform("psi", AgeFunction::sigmoid(1.0, 3.0, 2.0), 2)};
  const std::vector<double> ts{2.0, 5.0, 8.0};
  const int n = 10000, T = 3, F = 2;
  const auto b = sample_gaussian(m, l, fs, ts, n, 1);
  CovarianceKernels K(m, l);

  const char* names[] = {"01", "02", "1", "2"};
  // analytic entries: the diagonal blocks and the M1/M2 coupling
  const std::vector<std::pair<int, int>> analytic{{0, 0}, {1, 1}, {2, 2}, {3, 3}, {2, 3}};
  // independent pairs; (2, 1) is the M1/M02 pair
  const std::vector<std::pair<int, int>> zeros{{0, 1}, {0, 2}, {0, 3}, {1, 3}, {2, 1}};
  int entries = 0, bad = 0, zero_entries = 0, zero_bad = 0, lit_bad = 0, lit_entries = 0;
  double worst_lit = 0.0;
  for (int f = 0; f < F; ++f)
    for (int g = 0; g < F; ++g)
      for (int i = 0; i < T; ++i)
        for (int k = 0; k < T; ++k) {
          for (auto [x, y] : analytic) {
            const double an = K.cov_M(std::string(names[x]) + "-" + names[y], fs[f], fs[g], ts[i], ts[k]);
            const auto c = stats::covariance(b.M[x].col(f * T + i), b.M[y].col(g * T + k));
            ++entries;
            if (std::abs(c.cov - an) > 4 * c.se) ++bad;
          }
          for (auto [x, y] : zeros) {
            const auto c = stats::covariance(b.M[x].col(f * T + i), b.M[y].col(g * T + k));
            const bool off = std::abs(c.cov) > 4 * c.se;
            if (x == 2 && y == 1) {
              ++lit_entries;
              if (off) ++lit_bad;
              if (c.se > 0) worst_lit = std::max(worst_lit, std::abs(c.cov) / c.se);
            } else {
              ++zero_entries;
              if (off) ++zero_bad;
            }
          }
        }
  const bool ok = bad == 0 && zero_bad == 0 && lit_bad == 0;
  return {ok, std::to_string(entries - bad) + "/" + std::to_string(entries) + " kernel entries, " +
                  std::to_string(zero_entries - zero_bad) + "/" + std::to_string(zero_entries) +
                  " independent pairs, M1/M02 literal zero " + std::to_string(lit_entries - lit_bad) +
                  "/" + std::to_string(lit_entries) + fmt(" (worst %.1f SE)", worst_lit),
          bad == 0 && zero_bad == 0};
}

// --- 5: quadratic variation ---------------------------------------------------
Outcome qv() {
  const auto m = model(testmodels::kModelB);
  const auto phi = TestFunctional::lambda(m);
  SimOptions o;
  o.incremental = true;
  Eigen::VectorXd ratio(50);
  for (int r = 0; r < 50; ++r) {
    const auto s = simulate(m, 2000, 8.0, o, replica_seed(1, 2000, r));
    ratio[r] = qv_check(s, m, phi).ratio;
  }
  const double mean = ratio.mean();
  return {mean >= 0.95 && mean <= 1.05,
          fmt("mean ratio %.4f", mean) + fmt(" +- %.4f", stats::stderr_mean(ratio)) +
              " (accept [0.95, 1.05])"};
}

// --- 6: coupling --------------------------------------------------------------
Outcome coupling() {
  const auto m = model(testmodels::kModelB);
  const auto l = lln(m);
  VerifyOptions vo;
  vo.incremental = true;
  const auto a = coupling_check(m, l, 500, 20, 8.0, 1, vo);
  const auto b = coupling_check(m, l, 2000, 20, 8.0, 1, vo);
  const double ratio = a.mean_A() / b.mean_A();
  const bool ok = a.all_below && b.all_below && ratio >= 1.4 && ratio <= 2.9;
  return {ok, fmt("E sup|dA| %.4f at N=500", a.mean_A()) + fmt(", %.4f at N=2000", b.mean_A()) +
                  fmt(", ratio %.3f", ratio) + std::string(", all below bound ") +
                  (a.all_below && b.all_below ? "yes" : "no")};
}

// --- 7: solver self-consistency --------------------------------------------
double order(const std::function<double(double)>& q) {
  const double a = q(0.1), b = q(0.05), c = q(0.025);
  return std::log2(std::abs((a - b) / (b - c)));
}

Outcome solver() {
  double res = 0.0;
  for (const char* text : kAllModels) {
    const auto m = model(text);
    res = std::max(res, lln_residual(lln(m), m).max());
  }
  const auto b = model(testmodels::kModelB);
  const auto b2 = model(testmodels::kModelB2);
  const double oF = order([&](double dt) { return interp_F(lln(b, 8.0, dt), 5.0); });
  const double oV = order([&](double dt) {
    return fluctuation_moments_exact(b2, lln(b2, 8.0, dt), {5.0}).cov_hF(0, 0);
  });

  const auto c = model(testmodels::kModelC);
  const auto l = lln(c);
  const auto batch = sample_gaussian(c, l, fluctuation_functionals(c), {}, 2, 1);
  const auto s0 = solve_fluctuation(c, l, batch, 0), s1 = solve_fluctuation(c, l, batch, 1);
  const int K = l.grid.steps + 1, nf = 1 + c.num_traits();
  Eigen::MatrixXd n0(nf, K), n1(nf, K);
  for (int f = 0; f < nf; ++f)
    for (int k = 0; k < K; ++k) {
      n0(f, k) = batch.combined(0, f, k);
      n1(f, k) = batch.combined(1, f, k);
    }
  const auto sum = solve_fluctuation(c, l, Eigen::MatrixXd(n0 + n1));
  const double scale = s0.hF.cwiseAbs().maxCoeff() + s1.hF.cwiseAbs().maxCoeff();
  const double sup = std::max((sum.hF - s0.hF - s1.hF).cwiseAbs().maxCoeff(),
                              (sum.hS - s0.hS - s1.hS).cwiseAbs().maxCoeff()) / scale;
  const bool ok = res < 1e-8 && oF >= 1.8 && oV >= 1.5 && sup < 1e-13;
  return {ok, fmt("residual %.1e", res) + fmt(", order F %.2f", oF) + fmt(", order Var hF %.2f", oV) +
                  fmt(", superposition %.1e", sup)};
}

// --- 8: zero mass -------------------------------------------------------------
Outcome zero_mass() {
  bool ok = true;
  std::string d;
  for (std::size_t i = 0; i < kAllModels.size(); ++i) {
    const auto m = model(kAllModels[i]);
    const auto l = lln(m);
    auto fs = fluctuation_functionals(m);
    const auto one = TestFunctional::constant(m.num_traits(), 1.0);
    fs.push_back(one);
    const auto b = sample_gaussian(m, l, fs, {}, 5, 1);
    double worst = 0.0;
    for (int r = 0; r < 5; ++r) {
      const auto s = solve_fluctuation(m, l, b, r);
      for (int k = 0; k < s.t.size(); ++k)
        worst = std::max(worst, std::abs(hat_u_functional(m, l, s, b, r, one, s.t[k])) / s.budget);
    }
    ok = ok && worst <= 10.0;
    d += std::string(i ? ", " : "") + kNames[i] + fmt(" %.2g", worst);
  }
  return {ok, "max |<u,1>| / budget: " + d + " (accept <= 10)"};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double limit_s;  // wall-clock limit on this machine
    Outcome (*run)();
    const char* known;  // documented deviation, or nullptr
  };
  const std::vector<Criterion> all{
      {1, "exactness degeneracies", 60, exactness, nullptr},
      {2, "LLN rate", 600, lln_rate, nullptr},
      {3, "FCLT marginals", 1200, fclt, nullptr},
      {4, "noise covariance fidelity", 300, noise,
       "the limit model couples M1 and M02 through shared deaths and births, so their covariance "
       "is not zero"},
      {5, "quadratic variation", 600, qv, nullptr},
      {6, "coupling bound", 300, coupling, nullptr},
      {7, "solver self-consistency", 1e9, solver, nullptr},
      {8, "zero mass", 1e9, zero_mass, nullptr},
  };
  int unexpected = 0;
  for (const auto& c : all) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o = c.run();
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs <= c.limit_s;
    const bool pass = o.pass && in_time;
    std::printf("criterion %d %-26s %s  %s [%.1f s%s]", c.id, c.name, pass ? "PASS" : "FAIL",
                o.detail.c_str(), secs, in_time ? "" : ", over time limit");
    const bool excused = !pass && in_time && c.known && o.known_only;
    if (excused) std::printf("  known deviation: %s", c.known);
    std::printf("\n");
    std::fflush(stdout);
    if (!pass && !excused) ++unexpected;
  }
  return unexpected == 0 ? 0 : 1;
}
