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

#ifndef EPIFLUX_LLN_HPP
#define EPIFLUX_LLN_HPP

#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "epiflux/model.hpp"

namespace epiflux {

struct LlnOptions {
  double horizon = 10.0;
  double dt = 0.05;
  double tol = 1e-12;
  int max_iters = 1000;
  double tail_mass = 1e-8;
};

/// Cohort layout on the solver grid (step h, nodes t_k = k h).
///
/// Initial cohorts: age cell [i h, (i+1) h) crossed with trait j, index i*J + j.
/// Birth cohorts: born during step m into trait j, index n_init + m*J + j.
/// Every cohort sits at age (k + offset + 1/2) h at node k, so ages on the grid
/// are half-integers and breakpoints placed on multiples of h never fall inside
/// a cohort. Cohorts present at node k form the prefix [0, alive(k)).
struct CohortGrid {
  double h = 0.0;
  int steps = 0;
  int cells = 0;
  int J = 1;

  int n_init() const { return cells * J; }
  int size() const { return n_init() + steps * J; }
  int alive(int k) const { return n_init() + k * J; }
  int trait(int c) const { return c % J; }
  bool born(int c) const { return c >= n_init(); }
  int offset(int c) const { return born(c) ? -((c - n_init()) / J) - 1 : c / J; }
  /// number of half-integer age nodes needed for any cohort at any node
  int age_nodes() const { return cells + steps; }
  double node_age(int idx) const { return (idx + 0.5) * h; }
  double time(int k) const { return k * h; }
};

struct LlnSolution {
  CohortGrid grid;
  Eigen::VectorXd t;
  Eigen::VectorXd F;
  Eigen::MatrixXd S;          // (steps+1) x J
  Eigen::VectorXd cell_mass;  // law of a_0 on the age cells
  double a0_max = 0.0;        // truncation of initial ages (last cell holds the tail)
  double tail_mass = 0.0;
  double tol = 0.0;
  double residual = 0.0;      // largest Picard update at acceptance
  int max_picard = 0;         // most Picard sweeps used by any step
  std::uint64_t model_digest = 0;

  double horizon() const { return grid.time(grid.steps); }
  double dt() const { return grid.h; }
};

LlnSolution solve_lln(const ModelSpec& model, const LlnOptions& options);

/// Linear interpolation of F, S between nodes. GridError beyond the horizon.
double interp_F(const LlnSolution& sol, double t);
double interp_S(const LlnSolution& sol, double t, int j);

/// int_{r0}^{r1} F(r) gamma(age0 + r - r0, j) dr, split at grid nodes and
/// at the breakpoints of gamma, two-point Gauss on each piece.
double exposure(const LlnSolution& sol, const ModelSpec& model, int j, double age0, double r0,
                double r1);

/// Density of mu_t with respect to da nu(dtheta), along characteristics.
double density(const LlnSolution& sol, const ModelSpec& model, double t, double a, int j);

struct ResidualReport {
  double F = 0.0;
  double S = 0.0;
  double max() const { return F > S ? F : S; }
};

/// Recomputes the right-hand sides of the (F, S) fixed point from the stored
/// tables and returns the sup-norm discrepancies.
ResidualReport lln_residual(const LlnSolution& sol, const ModelSpec& model);

/// f(a, j) tabulated at the half-integer grid ages: J x age_nodes().
Eigen::MatrixXd tabulate_ages(const CohortGrid& grid,
                              const std::function<double(double, int)>& f);

/// Deterministic cohort masses replayed from a solution. mass[k] holds the
/// alive prefix at node k; survival[k] the factors for step k -> k+1.
struct CohortPath {
  CohortGrid grid;
  Eigen::MatrixXd lam, gam;  // age tables
  std::vector<Eigen::VectorXd> mass;
  std::vector<Eigen::VectorXd> survival;
  Eigen::VectorXd m0;  // initial cohort masses
};

CohortPath replay_cohorts(const LlnSolution& sol, const ModelSpec& model);

}  // namespace epiflux

#endif  // EPIFLUX_LLN_HPP
