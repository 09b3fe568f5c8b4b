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

#ifndef EPIFLUX_STATS_HPP
#define EPIFLUX_STATS_HPP

#include <vector>

#include <Eigen/Dense>

namespace epiflux::stats {

double mean(const Eigen::Ref<const Eigen::VectorXd>& x);
/// unbiased sample variance
double variance(const Eigen::Ref<const Eigen::VectorXd>& x);
double stderr_mean(const Eigen::Ref<const Eigen::VectorXd>& x);

/// Sample covariance and its standard error (from the spread of the
/// centred products).
struct CovEstimate {
  double cov = 0.0;
  double se = 0.0;
};
CovEstimate covariance(const Eigen::Ref<const Eigen::VectorXd>& x,
                       const Eigen::Ref<const Eigen::VectorXd>& y);

/// Limiting Kolmogorov distribution: P(sup|B| > x) = 2 sum (-1)^{k-1} e^{-2k^2x^2}.
double kolmogorov_sf(double x);

struct KsResult {
  double D = 0.0;
  double p = 1.0;
};
/// One-sample KS test against Normal(mu, var), asymptotic p-value.
KsResult ks_normal(const Eigen::Ref<const Eigen::VectorXd>& x, double mu, double var);

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_se = 0.0;
};
LineFit fit_line(const Eigen::Ref<const Eigen::VectorXd>& x,
                 const Eigen::Ref<const Eigen::VectorXd>& y);

struct ChiSquare {
  double stat = 0.0;
  int dof = 0;
  double p = 1.0;
};
/// Goodness of fit of counts to probabilities (cells with zero probability
/// must be empty; they are dropped).
ChiSquare chi_square(const std::vector<long>& counts, const std::vector<double>& probs);
/// Homogeneity of two count vectors over the same cells.
ChiSquare chi_square_two_sample(const std::vector<long>& a, const std::vector<long>& b);

}  // namespace epiflux::stats

#endif  // EPIFLUX_STATS_HPP
