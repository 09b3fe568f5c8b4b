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

#ifndef EPIFLUX_FLUCTUATION_HPP
#define EPIFLUX_FLUCTUATION_HPP

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "epiflux/functional.hpp"
#include "epiflux/gaussian.hpp"
#include "epiflux/lln.hpp"
#include "epiflux/model.hpp"

namespace epiflux {

struct FluctuationSolution {
  Eigen::VectorXd t;
  Eigen::VectorXd hF;
  Eigen::MatrixXd hS;  // (steps+1) x J
  int replicate = -1;
  std::uint64_t seed = 0;
  /// rounding plus Picard-tolerance budget for identities that hold exactly
  /// in exact arithmetic (zero mass, constant lambda)
  double budget = 0.0;
};

/// lambda followed by gamma K[.][j] for every trait, the inputs of the solver.
std::vector<TestFunctional> fluctuation_functionals(const ModelSpec& model);

/// Marches the linear fluctuation system on the solver grid, driven by
/// replicate r of a batch sampled at every node. GridMismatch if the batch
/// lacks a node or one of fluctuation_functionals(model); SingularStep if the
/// implicit (1 + J) system of a step cannot be solved.
FluctuationSolution solve_fluctuation(const ModelSpec& model, const LlnSolution& lln,
                                      const GaussianSampleBatch& noise, int r);

/// Same, driven by combined noise values N(f, k) = (M01 - M02 + M1 - M2)
/// for the functionals of fluctuation_functionals(model) at every node.
FluctuationSolution solve_fluctuation(const ModelSpec& model, const LlnSolution& lln,
                                      const Eigen::MatrixXd& noise);

/// <u_t, phi>: the linear response to (hF, hS) plus the noise functionals of
/// phi. MissingFunctional if phi is not in the batch.
double hat_u_functional(const ModelSpec& model, const LlnSolution& lln,
                        const FluctuationSolution& sol, const GaussianSampleBatch& noise, int r,
                        const TestFunctional& phi, double t);

struct FluctuationMoments {
  std::vector<double> times;
  Eigen::MatrixXd cov_hF;  // times x times
  Eigen::MatrixXd se_hF;
  Eigen::MatrixXd var_hS;  // times x J
  Eigen::MatrixXd se_hS;
  int replicates = 0;  // 0 for the exact tables
  std::uint64_t seed = 0;
};

/// Monte Carlo moments over n replicates of the limit system.
FluctuationMoments fluctuation_moments(const ModelSpec& model, const LlnSolution& lln,
                                       const std::vector<double>& times, int n,
                                       std::uint64_t seed, int jobs = 1);

/// Exact second moments of the discrete limit system (backward sweep).
FluctuationMoments fluctuation_moments_exact(const ModelSpec& model, const LlnSolution& lln,
                                             const std::vector<double>& times);

}  // namespace epiflux

#endif  // EPIFLUX_FLUCTUATION_HPP
