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

#ifndef EPIFLUX_FUNCTIONAL_HPP
#define EPIFLUX_FUNCTIONAL_HPP

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "epiflux/model.hpp"

namespace epiflux {

/// Test function phi(a, theta_j) = scale_j * f_j(a). Tables are AgeFunctions
/// of the tabulated family, which fixes the extrapolation (constant or zero).
struct TestFunctional {
  std::string label;
  std::vector<AgeFunction> f;
  Eigen::VectorXd scale;
  std::optional<Eigen::VectorXd> boundary;  // phi(0, theta_j) if it differs from f_j(0)

  int num_traits() const { return static_cast<int>(f.size()); }
  double operator()(double a, int j) const { return scale[j] * f[j](a); }
  double at_zero(int j) const { return boundary ? (*boundary)[j] : (*this)(0.0, j); }
  /// age grid of the first tabulated component, empty if none
  std::vector<double> grid() const;

  static TestFunctional constant(int J, double c, std::string label = "one");
  static TestFunctional lambda(const ModelSpec& model);
  /// gamma(a, theta_i) K[i][j]: the integrand of S(t, theta_j)
  static TestFunctional gamma_kernel(const ModelSpec& model, int j);
  /// values: ages x J
  static TestFunctional table(std::string label, const std::vector<double>& ages,
                              const Eigen::MatrixXd& values, bool zero_tail = false);
  static TestFunctional uniform(std::string label, const AgeFunction& f, int J);
};

/// Labels used for the functionals the fluctuation solver needs.
std::string gamma_kernel_label(const ModelSpec& model, int j);

// R phi(a, i) = sum_j (phi(0, j) - phi(a, i)) gamma(a, i) K[i][j] w_j, and the
// squared / fourth-power / product variants.
double apply_R(const ModelSpec& model, const TestFunctional& phi, double a, int i);
double apply_R2(const ModelSpec& model, const TestFunctional& phi, double a, int i);
double apply_R4(const ModelSpec& model, const TestFunctional& phi, double a, int i);
double apply_Rtilde(const ModelSpec& model, const TestFunctional& phi, const TestFunctional& psi,
                    double a, int i);

/// Tabulated operators on an age grid: ages x J. GridMismatch if the
/// functionals do not match the model's traits, or two tables disagree on
/// their age grids.
Eigen::MatrixXd operator_R(const ModelSpec& model, const TestFunctional& phi,
                           const std::vector<double>& ages);
Eigen::MatrixXd operator_R2(const ModelSpec& model, const TestFunctional& phi,
                            const std::vector<double>& ages);
Eigen::MatrixXd operator_Rtilde(const ModelSpec& model, const TestFunctional& phi,
                                const TestFunctional& psi, const std::vector<double>& ages);

}  // namespace epiflux

#endif  // EPIFLUX_FUNCTIONAL_HPP
