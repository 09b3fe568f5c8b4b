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

#ifndef EPIFLUX_VERIFICATION_HPP
#define EPIFLUX_VERIFICATION_HPP

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "epiflux/fluctuation.hpp"
#include "epiflux/functional.hpp"
#include "epiflux/lln.hpp"
#include "epiflux/model.hpp"
#include "epiflux/pdmp.hpp"

namespace epiflux {

struct VerifyOptions {
  int jobs = 1;
  bool incremental = false;  // incremental F^N in the particle runs
};

/// Seed of replicate `rep` at population size N.
std::uint64_t replica_seed(std::uint64_t master, int N, int rep);

struct ConvergenceReport {
  std::vector<int> N;
  Eigen::VectorXd mean_err;  // E sup_t |F^N - F| over the snapshot grid
  Eigen::VectorXd se_err;
  Eigen::MatrixXd err;       // N x reps
  double slope = 0.0, intercept = 0.0, slope_se = 0.0;
  double slope_lo = -0.65, slope_hi = -0.35;
  bool degenerate = false;
  std::string reason;
  bool pass = false;
  int reps = 0;
  double horizon = 0.0, dt = 0.0;
  std::uint64_t seed = 0, model_digest = 0;
};

/// Particle runs at each N against the LLN table; sup over the LLN nodes in
/// [0, T], log-log least squares of the mean errors.
ConvergenceReport lln_convergence(const ModelSpec& model, const LlnSolution& lln,
                                  const std::vector<int>& N_list, int reps, double T,
                                  std::uint64_t seed, const VerifyOptions& options = {});

struct CltReport {
  std::vector<double> times;
  int N = 0, reps = 0;
  Eigen::MatrixXd samples;  // reps x times: sqrt(N) (F^N - F)
  Eigen::VectorXd var_emp, var_pred, ratio, ks_D, ks_p;
  /// correlations between consecutive times: empirical vs predicted
  Eigen::VectorXd corr_emp, corr_pred;
  double ratio_lo = 0.8, ratio_hi = 1.25, p_min = 0.01, corr_tol = 0.15;
  bool degenerate = false;
  std::string reason;
  std::vector<bool> pass;  // per time
  bool corr_pass = true;
  std::uint64_t seed = 0, model_digest = 0;
  double dt = 0.0;
};

/// sqrt(N)(F^N(t) - F(t)) over reps runs against Normal(0, Var hF(t)) from
/// the supplied moments (which must be at the same times). reps >= 100.
CltReport clt_check(const ModelSpec& model, const LlnSolution& lln, const FluctuationMoments& moments,
                    int N, int reps, std::uint64_t seed, const VerifyOptions& options = {});

struct QvReport {
  double realized = 0.0;     // (1/N) sum of squared jumps of phi
  double compensator = 0.0;  // int F^N <mu^N, R2 phi> ds
  double ratio = 0.0;        // realized / compensator (NaN when both vanish)
  double z = 0.0;            // (realized - compensator) / sqrt((1/N) int F^N <mu^N, R4 phi>)
  double W = 0.0;            // W^N_T(phi)
  long events = 0;
  int substeps = 0;
};

/// Replays the event log of a run. EventLogMissing if the run did not keep
/// its events.
QvReport qv_check(const SimOutput& sim, const ModelSpec& model, const TestFunctional& phi,
                  int substeps = 4000);

struct CouplingReport {
  int N = 0, reps = 0;
  double horizon = 0.0;
  Eigen::VectorXd mean_dA, mean_da;  // per run, averaged over individuals
  double bound_A = 0.0, bound_a = 0.0;
  bool all_below = false;
  std::uint64_t seed = 0, model_digest = 0;
  double mean_A() const { return mean_dA.size() ? mean_dA.mean() : 0.0; }
  double mean_a() const { return mean_da.size() ? mean_da.mean() : 0.0; }
};

/// Bounds (lambda*/sqrt N) T exp(4 T lambda* kappa_bar) and T times that.
CouplingReport coupling_check(const ModelSpec& model, const LlnSolution& lln, int N, int reps,
                              double T, std::uint64_t seed, const VerifyOptions& options = {});

}  // namespace epiflux

#endif  // EPIFLUX_VERIFICATION_HPP
