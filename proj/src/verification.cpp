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

#include "epiflux/verification.hpp"

#include <cmath>
#include <limits>

#include "epiflux/errors.hpp"
#include "epiflux/parallel.hpp"
#include "epiflux/stats.hpp"

namespace epiflux {

std::uint64_t replica_seed(std::uint64_t master, int N, int rep) {
  return sub_seed(sub_seed(sub_seed(master, StreamTag::replica), static_cast<std::uint64_t>(N)),
                  static_cast<std::uint64_t>(rep));
}

namespace {

int last_node(const LlnSolution& lln, double T) {
  if (T > lln.horizon() * (1 + 1e-12)) throw GridError("horizon exceeds the LLN solution");
  return std::min(lln.grid.steps, static_cast<int>(std::floor(T / lln.grid.h + 1e-9)));
}

std::vector<double> node_times(const LlnSolution& lln, int kmax) {
  std::vector<double> t(kmax + 1);
  for (int k = 0; k <= kmax; ++k) t[k] = lln.grid.time(k);
  return t;
}

}  // namespace

ConvergenceReport lln_convergence(const ModelSpec& model, const LlnSolution& lln,
                                  const std::vector<int>& N_list, int reps, double T,
                                  std::uint64_t seed, const VerifyOptions& opt) {
  if (N_list.size() < 3) throw ConfigError("convergence study needs at least three population sizes");
  if (reps < 2) throw ConfigError("convergence study needs at least two replicates");
  const int kmax = last_node(lln, T);
  SimOptions so;
  so.snapshot_times = node_times(lln, kmax);
  so.keep_events = false;
  so.incremental = opt.incremental;

  ConvergenceReport rep;
  rep.N = N_list;
  rep.reps = reps;
  rep.horizon = T;
  rep.dt = lln.grid.h;
  rep.seed = seed;
  rep.model_digest = model.digest;
  const int nN = static_cast<int>(N_list.size());
  rep.err.resize(nN, reps);
  parallel_for(nN * reps, opt.jobs, [&](int idx) {
    const int i = idx / reps, r = idx % reps;
    const auto sim = simulate(model, N_list[i], T, so, replica_seed(seed, N_list[i], r));
    double e = 0.0;
    for (int k = 0; k <= kmax; ++k) e = std::max(e, std::abs(sim.F_emp[k] - lln.F[k]));
    rep.err(i, r) = e;
  });
  rep.mean_err = rep.err.rowwise().mean();
  rep.se_err.resize(nN);
  for (int i = 0; i < nN; ++i) rep.se_err[i] = stats::stderr_mean(rep.err.row(i).transpose());

  if (rep.mean_err.maxCoeff() < 1e-12) {
    rep.degenerate = true;
    rep.reason = "degenerate: constant λ";
    rep.pass = true;
    return rep;
  }
  Eigen::VectorXd lx(nN), ly(nN);
  for (int i = 0; i < nN; ++i) {
    lx[i] = std::log(static_cast<double>(N_list[i]));
    ly[i] = std::log(rep.mean_err[i]);
  }
  const auto fit = stats::fit_line(lx, ly);
  rep.slope = fit.slope;
  rep.intercept = fit.intercept;
  rep.slope_se = fit.slope_se;
  rep.pass = std::isfinite(fit.slope) && fit.slope >= rep.slope_lo && fit.slope <= rep.slope_hi;
  return rep;
}

CltReport clt_check(const ModelSpec& model, const LlnSolution& lln, const FluctuationMoments& mo,
                    int N, int reps, std::uint64_t seed, const VerifyOptions& opt) {
  if (reps < 100) throw ConfigError("the asymptotic KS test needs at least 100 replicates");
  const auto& times = mo.times;
  const int T = static_cast<int>(times.size());
  if (T == 0) throw ConfigError("no check times");
  std::vector<int> nodes;
  for (double t : times) {
    const long k = std::lround(t / lln.grid.h);
    if (std::abs(t / lln.grid.h - static_cast<double>(k)) > 1e-7 || k > lln.grid.steps)
      throw GridError("check time " + format_double(t) + " is not an LLN node");
    nodes.push_back(static_cast<int>(k));
  }
  SimOptions so;
  so.snapshot_times = times;
  so.keep_events = false;
  so.incremental = opt.incremental;
  const double Tmax = *std::max_element(times.begin(), times.end());

  CltReport rep;
  rep.times = times;
  rep.N = N;
  rep.reps = reps;
  rep.seed = seed;
  rep.model_digest = model.digest;
  rep.dt = lln.grid.h;
  rep.samples.resize(reps, T);
  const double sq = std::sqrt(static_cast<double>(N));
  parallel_for(reps, opt.jobs, [&](int r) {
    const auto sim = simulate(model, N, Tmax, so, replica_seed(seed, N, r));
    for (int i = 0; i < T; ++i) rep.samples(r, i) = sq * (sim.F_emp[i] - lln.F[nodes[i]]);
  });

  rep.var_emp.resize(T);
  rep.var_pred.resize(T);
  rep.ratio.resize(T);
  rep.ks_D.resize(T);
  rep.ks_p.resize(T);
  rep.pass.assign(T, false);
  bool degenerate = true;
  for (int i = 0; i < T; ++i) {
    rep.var_emp[i] = stats::variance(rep.samples.col(i));
    rep.var_pred[i] = mo.cov_hF(i, i);
    if (rep.var_pred[i] > 1e-14 || rep.var_emp[i] > 1e-14) degenerate = false;
  }
  if (degenerate) {
    rep.degenerate = true;
    rep.reason = "degenerate: fluctuations vanish identically";
    rep.pass.assign(T, true);
    rep.ratio.setOnes();
    rep.ks_p.setOnes();
    rep.ks_D.setZero();
    return rep;
  }
  for (int i = 0; i < T; ++i) {
    rep.ratio[i] = rep.var_emp[i] / rep.var_pred[i];
    const auto ks = stats::ks_normal(rep.samples.col(i), 0.0, rep.var_pred[i]);
    rep.ks_D[i] = ks.D;
    rep.ks_p[i] = ks.p;
    rep.pass[i] = ks.p > rep.p_min && rep.ratio[i] >= rep.ratio_lo && rep.ratio[i] <= rep.ratio_hi;
  }
  if (T > 1) {
    rep.corr_emp.resize(T - 1);
    rep.corr_pred.resize(T - 1);
    for (int i = 0; i + 1 < T; ++i) {
      const auto c = stats::covariance(rep.samples.col(i), rep.samples.col(i + 1));
      rep.corr_emp[i] = c.cov / std::sqrt(rep.var_emp[i] * rep.var_emp[i + 1]);
      rep.corr_pred[i] = mo.cov_hF(i, i + 1) / std::sqrt(rep.var_pred[i] * rep.var_pred[i + 1]);
      if (std::abs(rep.corr_emp[i] - rep.corr_pred[i]) > rep.corr_tol) rep.corr_pass = false;
    }
  }
  return rep;
}

QvReport qv_check(const SimOutput& sim, const ModelSpec& model, const TestFunctional& phi,
                  int substeps) {
  if (sim.events.empty() && sim.accepted > 0)
    throw EventLogMissing("run was simulated without keeping its event log");
  if (substeps < 1) throw ConfigError("substeps must be positive");
  if (phi.num_traits() != model.num_traits())
    throw GridMismatch("functional '" + phi.label + "' has wrong traits");
  const int N = sim.N;
  QvReport q;
  q.events = static_cast<long>(sim.events.size());
  q.substeps = substeps;

  double jumps = 0.0;
  for (const auto& e : sim.events) {
    const double d = phi.at_zero(e.trait_after) - phi(e.age_at_event, e.trait_before);
    q.realized += d * d;
    jumps += d;
  }
  q.realized /= N;

  // replay: birth time (negative for the initial ages) and trait per individual
  std::vector<double> born(N);
  std::vector<int> trait(N);
  for (int k = 0; k < N; ++k) {
    born[k] = -sim.initial[k].age;
    trait[k] = sim.initial[k].trait;
  }
  const double T = sim.horizon, ds = T / substeps;
  std::size_t ev = 0;
  double comp = 0.0, quart = 0.0, drift = 0.0;
  for (int s = 0; s < substeps; ++s) {
    const double tm = (s + 0.5) * ds;
    while (ev < sim.events.size() && sim.events[ev].time <= tm) {
      born[sim.events[ev].k] = sim.events[ev].time;
      trait[sim.events[ev].k] = sim.events[ev].trait_after;
      ++ev;
    }
    double F = 0.0, r1 = 0.0, r2 = 0.0, r4 = 0.0;
    for (int k = 0; k < N; ++k) {
      const double a = tm - born[k];
      const int th = trait[k];
      F += model.lambda[th](a);
      if (model.gamma[th](a) == 0.0) continue;
      r1 += apply_R(model, phi, a, th);
      r2 += apply_R2(model, phi, a, th);
      r4 += apply_R4(model, phi, a, th);
    }
    F /= N;
    comp += F * r2 / N * ds;
    quart += F * r4 / N * ds;
    drift += F * r1 / N * ds;
  }
  q.compensator = comp;
  q.ratio = q.compensator > 0 ? q.realized / q.compensator : std::numeric_limits<double>::quiet_NaN();
  const double sd = std::sqrt(quart / N);
  q.z = sd > 0 ? (q.realized - q.compensator) / sd : 0.0;
  q.W = std::sqrt(static_cast<double>(N)) * (jumps / N - drift);
  return q;
}

CouplingReport coupling_check(const ModelSpec& model, const LlnSolution& lln, int N, int reps,
                              double T, std::uint64_t seed, const VerifyOptions& opt) {
  last_node(lln, T);
  CouplingReport rep;
  rep.N = N;
  rep.reps = reps;
  rep.horizon = T;
  rep.seed = seed;
  rep.model_digest = model.digest;
  rep.bound_A = model.lambda_star / std::sqrt(static_cast<double>(N)) * T *
                std::exp(4.0 * T * model.lambda_star * model.kappa_bar);
  rep.bound_a = T * rep.bound_A;
  rep.mean_dA.resize(reps);
  rep.mean_da.resize(reps);
  parallel_for(reps, opt.jobs, [&](int r) {
    const auto c = simulate_coupled(model, lln, N, T, replica_seed(seed, N, r), opt.incremental);
    rep.mean_dA[r] = c.mean_dA();
    rep.mean_da[r] = c.mean_da();
  });
  rep.all_below = (rep.mean_dA.array() <= rep.bound_A).all() &&
                  (rep.mean_da.array() <= rep.bound_a).all();
  return rep;
}

}  // namespace epiflux
