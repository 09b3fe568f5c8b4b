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

#ifndef EPIFLUX_GAUSSIAN_HPP
#define EPIFLUX_GAUSSIAN_HPP

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "epiflux/functional.hpp"
#include "epiflux/lln.hpp"
#include "epiflux/model.hpp"
#include "epiflux/rng.hpp"

namespace epiflux {

enum class NoiseBlock : int { m01 = 0, m02 = 1, m1 = 2, m2 = 3 };
constexpr std::array<const char*, 4> kBlockNames{"M01", "M02", "M1", "M2"};

/// Quadrature of the limit-noise covariance kernels on the LLN grid.
///
/// Blocks: "01-01", "02-02", "1-1", "2-2", "1-2", and "1-02" (the M1 / M02
/// coupling through shared deaths -> births), with their transposes "2-1",
/// "02-1". Pairs that are independent return exactly 0: "01-02", "1-01",
/// "2-01", "2-02" and transposes. Anything else raises UnknownBlock.
/// Times must be grid nodes.
class CovarianceKernels {
 public:
  CovarianceKernels(const ModelSpec& model, const LlnSolution& lln);

  double cov_M(const std::string& block, const TestFunctional& phi, const TestFunctional& psi,
               double t, double t2) const;
  /// int_0^{t^t'} <mu_s, lambda> <mu_s, Rtilde(phi, psi)> ds
  double cov_W(const TestFunctional& phi, const TestFunctional& psi, double t, double t2) const;

  /// Node index of t; GridError off the grid or beyond the horizon.
  int node(double t) const;
  const LlnSolution& lln() const { return lln_; }

 private:
  Eigen::MatrixXd table(const TestFunctional& phi) const;
  double b0101(const Eigen::MatrixXd& P, const Eigen::MatrixXd& Q, int k, int l) const;
  double b0202(const Eigen::MatrixXd& P, const Eigen::MatrixXd& Q, int k, int l) const;
  double b11(const Eigen::MatrixXd& P, const Eigen::MatrixXd& Q, int k, int l) const;
  double b22(const Eigen::MatrixXd& P, const Eigen::MatrixXd& Q, int k, int l) const;
  double b12(const Eigen::MatrixXd& P, const Eigen::MatrixXd& Q, int k, int l) const;
  double b102(const Eigen::MatrixXd& P, const Eigen::MatrixXd& Q, int k, int l) const;
  /// mean of gamma(., j) over a triangular law of half-width h centred at d
  double gamma_tri(int j, double d) const;

  const ModelSpec& model_;
  const LlnSolution& lln_;
  CohortGrid g_;
  Eigen::VectorXd Fm_;   // F at step midpoints
  Eigen::MatrixXd Sm_;   // S at step midpoints (steps x J)
  Eigen::MatrixXd H0_;   // initial cohort exposures at nodes: n_init x (steps+1)
  Eigen::MatrixXd G_;    // birth-midpoint exposures at nodes: (steps*J) x (steps+1)
  Eigen::MatrixXd gtri_; // gamma_tri at multiples of h: J x (age_nodes+2)
  CohortPath path_;
};

double cov_M(const ModelSpec& model, const LlnSolution& lln, const std::string& block,
             const TestFunctional& phi, const TestFunctional& psi, double t, double t2);
double cov_W(const ModelSpec& model, const LlnSolution& lln, const TestFunctional& phi,
             const TestFunctional& psi, double t, double t2);

struct GaussianOptions {
  /// "cells": exact square-root factor through per-cohort noise cells;
  /// "cholesky": factorisation of the assembled cov_M matrix with jitter.
  std::string method = "cells";
  double jitter_start = 1e-12;
  double jitter_max = 1e-6;
  int jobs = 1;
};

struct GaussianSampleBatch {
  std::vector<double> times;
  std::vector<int> nodes;
  std::vector<std::string> labels;
  int replicates = 0;
  std::uint64_t seed = 0;
  std::string method;
  double jitter = 0.0;  // relative diagonal jitter used (cholesky only)
  /// per block: replicates x (functionals * times), column f * times + i
  std::array<Eigen::MatrixXd, 4> M;

  int num_times() const { return static_cast<int>(times.size()); }
  int functional_index(const std::string& label) const;
  double value(NoiseBlock b, int r, int f, int i) const {
    return M[static_cast<int>(b)](r, f * num_times() + i);
  }
  /// M01 - M02 + M1 - M2
  double combined(int r, int f, int i) const;
  GaussianSampleBatch scaled(double c) const;
};

/// Joint draws of (M01, M02, M1, M2) for each functional at each time.
/// Replicate r uses the stream sub_seed(sub_seed(seed, gaussian), r).
/// An empty time list means every node of the LLN grid.
GaussianSampleBatch sample_gaussian(const ModelSpec& model, const LlnSolution& lln,
                                    const std::vector<TestFunctional>& functionals,
                                    const std::vector<double>& times, int n, std::uint64_t seed,
                                    const GaussianOptions& options = {});

/// Cell sampler for one replicate at a time (shared with the fluctuation code).
class CellNoiseSampler {
 public:
  CellNoiseSampler(const ModelSpec& model, const LlnSolution& lln,
                   const std::vector<TestFunctional>& functionals, std::vector<int> nodes);
  /// out[b] has functionals * nodes entries, index f * nodes + i
  void draw(Rng& rng, std::array<Eigen::VectorXd, 4>& out) const;
  const CohortPath& path() const { return path_; }

 private:
  const ModelSpec& model_;
  const LlnSolution& lln_;
  CohortPath path_;
  std::vector<Eigen::MatrixXd> tables_;
  std::vector<int> nodes_;
  std::vector<int> slot_;  // node -> output slot or -1
};

}  // namespace epiflux

#endif  // EPIFLUX_GAUSSIAN_HPP
