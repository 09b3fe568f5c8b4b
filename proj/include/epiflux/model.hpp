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

#ifndef EPIFLUX_MODEL_HPP
#define EPIFLUX_MODEL_HPP

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "epiflux/config.hpp"
#include "epiflux/rng.hpp"

namespace epiflux {

enum class Family { constant, window, delay, exp_decay, sigmoid, tabulated };

/// Deterministic age profile from the family registry.
///   constant   value
///   window     value * 1{a < cutoff}
///   delay      value * 1{a >= threshold}   (right-closed)
///   exp_decay  value * exp(-rate a)
///   sigmoid    value / (1 + exp(-slope (a - midpoint)))
///   tabulated  linear interpolation; constant or zero beyond the last node
class AgeFunction {
 public:
  AgeFunction() = default;
  static AgeFunction constant(double value);
  static AgeFunction window(double value, double cutoff);
  static AgeFunction delay(double value, double threshold);
  static AgeFunction exp_decay(double value, double rate);
  static AgeFunction sigmoid(double value, double midpoint, double slope);
  static AgeFunction tabulated(std::vector<double> ages, std::vector<double> values,
                               bool zero_tail = false);

  double operator()(double a) const;

  Family family() const { return family_; }
  std::string family_name() const;
  const std::vector<double>& params() const { return params_; }
  const std::vector<double>& table_ages() const { return ages_; }
  const std::vector<double>& table_values() const { return values_; }
  bool zero_tail() const { return zero_tail_; }

  /// Ages where the profile is not smooth.
  std::vector<double> breakpoints() const;
  bool piecewise_constant() const;

 private:
  Family family_ = Family::constant;
  std::vector<double> params_{0.0};
  std::vector<double> ages_, values_;
  bool zero_tail_ = false;
};

enum class AgeLaw { exponential, uniform, gamma, pareto, point, empirical };

/// Law of the initial age a_0.
class InitialAgeLaw {
 public:
  InitialAgeLaw() = default;
  static InitialAgeLaw exponential(double rate);
  static InitialAgeLaw uniform(double low, double high);
  static InitialAgeLaw gamma(double shape, double scale);
  static InitialAgeLaw pareto(double scale, double shape);
  static InitialAgeLaw point(double value);
  static InitialAgeLaw empirical(std::vector<double> samples);

  AgeLaw law() const { return law_; }
  std::string name() const;
  const std::vector<double>& params() const { return params_; }
  const std::vector<double>& samples() const { return samples_; }

  double sample(Rng& rng) const;
  double cdf(double a) const;
  double pdf(double a) const;
  double mean() const;
  /// Smallest a with P(a_0 > a) <= eps.
  double tail_point(double eps) const;
  bool has_moment(double p) const;

 private:
  AgeLaw law_ = AgeLaw::exponential;
  std::vector<double> params_{1.0};
  std::vector<double> samples_;  // sorted, empirical law only
};

struct TraitGrid {
  std::vector<std::string> labels;
  Eigen::VectorXd weights;

  int size() const { return static_cast<int>(labels.size()); }
  int index_of(const std::string& label) const;
};

struct ModelSpec {
  TraitGrid traits;
  std::vector<AgeFunction> lambda;  // per trait
  std::vector<AgeFunction> gamma;   // per trait
  Eigen::MatrixXd kernel;           // K[i][j]
  double lambda_star = 0.0;
  double alpha = 1.0;
  double probe_max = 50.0;
  double kappa_bar = 0.0;
  InitialAgeLaw initial_age;
  Eigen::VectorXd trait_probs;

  // derived at build time
  Eigen::VectorXd kernel_sup;     // sup_i K[i][j]
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>
      jump_cdf;                   // row i: cumulative K[i][j] w_j
  Eigen::VectorXd envelope_cdf;   // cumulative sup_i K[i][j] w_j / kappa_bar
  Eigen::VectorXd trait_cdf;
  Eigen::VectorXd row_factors;    // renormalisation applied to kernel rows
  std::uint64_t digest = 0;

  int num_traits() const { return traits.size(); }
  /// lambda is piecewise constant in age for every trait
  bool lambda_piecewise_constant() const;
};

ModelSpec build_model(const Config& config);
Config model_to_config(const ModelSpec& model);

double eval_lambda(const ModelSpec& model, double a, int j);
double eval_gamma(const ModelSpec& model, double a, int j);

struct Individual {
  double age = 0.0;
  int trait = 0;
};

std::vector<Individual> sample_initial(const ModelSpec& model, int n, Rng& rng);
int sample_new_trait(const ModelSpec& model, int i, Rng& rng);

}  // namespace epiflux

#endif  // EPIFLUX_MODEL_HPP
