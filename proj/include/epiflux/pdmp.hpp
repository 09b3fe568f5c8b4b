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

#ifndef EPIFLUX_PDMP_HPP
#define EPIFLUX_PDMP_HPP

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "epiflux/lln.hpp"
#include "epiflux/model.hpp"
#include "epiflux/rng.hpp"

namespace epiflux {

struct PopulationState {
  double t = 0.0;
  std::vector<double> age;
  std::vector<int> trait;
  std::vector<long> reinfections;

  int size() const { return static_cast<int>(age.size()); }
};

struct EventRecord {
  double time = 0.0;
  int k = 0;
  int trait_before = 0;
  int trait_after = 0;
  double age_at_event = 0.0;
};

struct SimOptions {
  std::vector<double> snapshot_times;
  std::vector<double> hist_edges;  // age histogram bin edges; last bin is open
  bool keep_events = true;
  /// Incremental force of infection, valid when lambda is piecewise constant
  /// in age: F^N only changes at infections and breakpoint crossings.
  bool incremental = false;
};

struct SimOutput {
  std::uint64_t seed = 0;
  int N = 0;
  double horizon = 0.0;
  std::uint64_t model_digest = 0;

  std::vector<Individual> initial;
  std::vector<EventRecord> events;
  Eigen::VectorXd snapshot_times;
  Eigen::VectorXd F_emp;
  Eigen::MatrixXd S_emp;     // snapshots x traits
  Eigen::MatrixXd age_hist;  // snapshots x bins (fractions of N)
  std::vector<double> hist_edges;
  PopulationState final_state;

  // thinning diagnostics
  long candidates = 0;
  long accepted = 0;
  double accept_prob_sum = 0.0;  // sum of acceptance probabilities at candidates
  double accept_prob_var = 0.0;  // sum of p (1 - p)
};

/// Exact simulation of the N-individual system by thinning. Individual k owns
/// the stream sub_seed(seed, k) carrying its candidate times (rate
/// lambda_star * kappa_bar), candidate traits and uniforms; initial
/// conditions come from sub_seed(seed, initial_condition).
SimOutput simulate(const ModelSpec& model, int N, double T, const SimOptions& options,
                   std::uint64_t seed);

double force_of_infection(const ModelSpec& model, const PopulationState& state);
Eigen::VectorXd mean_susceptibility(const ModelSpec& model, const PopulationState& state);

struct LimitPath {
  Individual start;
  std::vector<EventRecord> jumps;
  long count = 0;
  double final_age = 0.0;
  int final_trait = 0;
};

/// One limit individual reinfected at rate F(t) gamma(a, theta), F from the
/// LLN table. The start is drawn from mu_0 on the stream unless given.
LimitPath limit_individual(const ModelSpec& model, const LlnSolution& lln, double T, Rng& rng,
                           std::optional<Individual> start = std::nullopt);

struct CoupledOutput {
  std::uint64_t seed = 0;
  int N = 0;
  double horizon = 0.0;
  std::vector<long> sup_dA;    // sup_t |A^N_k - A_k|
  std::vector<double> sup_da;  // sup_t |a^N_k - a_k|
  std::vector<long> count_N;   // A^N_k(T)
  std::vector<long> count_lim; // A_k(T)
  double mean_dA() const;
  double mean_da() const;
};

/// Finite system and N limit individuals driven by the same marked candidate
/// streams; only the acceptance tests differ.
CoupledOutput simulate_coupled(const ModelSpec& model, const LlnSolution& lln, int N, double T,
                               std::uint64_t seed, bool incremental = false);

}  // namespace epiflux

#endif  // EPIFLUX_PDMP_HPP
