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

#include "epiflux/functional.hpp"

#include <cmath>

#include "epiflux/errors.hpp"

namespace epiflux {

std::vector<double> TestFunctional::grid() const {
  for (const auto& g : f)
    if (g.family() == Family::tabulated) return g.table_ages();
  return {};
}

TestFunctional TestFunctional::constant(int J, double c, std::string label) {
  return {std::move(label), std::vector<AgeFunction>(J, AgeFunction::constant(c)),
          Eigen::VectorXd::Ones(J), std::nullopt};
}

TestFunctional TestFunctional::lambda(const ModelSpec& model) {
  return {"lambda", model.lambda, Eigen::VectorXd::Ones(model.num_traits()), std::nullopt};
}

std::string gamma_kernel_label(const ModelSpec& model, int j) {
  return "gammaK:" + model.traits.labels[j];
}

TestFunctional TestFunctional::gamma_kernel(const ModelSpec& model, int j) {
  return {gamma_kernel_label(model, j), model.gamma, model.kernel.col(j), std::nullopt};
}

TestFunctional TestFunctional::table(std::string label, const std::vector<double>& ages,
                                     const Eigen::MatrixXd& values, bool zero_tail) {
  if (values.rows() != static_cast<Eigen::Index>(ages.size()))
    throw GridMismatch("table '" + label + "' has " + std::to_string(values.rows()) +
                       " rows for " + std::to_string(ages.size()) + " ages");
  TestFunctional phi;
  phi.label = std::move(label);
  for (Eigen::Index j = 0; j < values.cols(); ++j) {
    std::vector<double> v(values.col(j).data(), values.col(j).data() + values.rows());
    phi.f.push_back(AgeFunction::tabulated(ages, std::move(v), zero_tail));
  }
  phi.scale = Eigen::VectorXd::Ones(values.cols());
  return phi;
}

TestFunctional TestFunctional::uniform(std::string label, const AgeFunction& f, int J) {
  return {std::move(label), std::vector<AgeFunction>(J, f), Eigen::VectorXd::Ones(J),
          std::nullopt};
}

namespace {

void check_traits(const ModelSpec& model, const TestFunctional& phi) {
  if (phi.num_traits() != model.num_traits() || phi.scale.size() != model.num_traits())
    throw GridMismatch("functional '" + phi.label + "' is defined on " +
                       std::to_string(phi.num_traits()) + " traits, model has " +
                       std::to_string(model.num_traits()));
}

template <class Pow>
double apply_power(const ModelSpec& model, const TestFunctional& phi, double a, int i, Pow pw) {
  const double g = model.gamma[i](a);
  if (g == 0.0) return 0.0;
  const double pa = phi(a, i);
  double s = 0.0;
  for (int j = 0; j < model.num_traits(); ++j)
    s += pw(phi.at_zero(j) - pa) * model.kernel(i, j) * model.traits.weights[j];
  return s * g;
}

}  // namespace

double apply_R(const ModelSpec& model, const TestFunctional& phi, double a, int i) {
  return apply_power(model, phi, a, i, [](double d) { return d; });
}

double apply_R2(const ModelSpec& model, const TestFunctional& phi, double a, int i) {
  return apply_power(model, phi, a, i, [](double d) { return d * d; });
}

double apply_R4(const ModelSpec& model, const TestFunctional& phi, double a, int i) {
  return apply_power(model, phi, a, i, [](double d) { return d * d * d * d; });
}

double apply_Rtilde(const ModelSpec& model, const TestFunctional& phi, const TestFunctional& psi,
                    double a, int i) {
  const double g = model.gamma[i](a);
  if (g == 0.0) return 0.0;
  const double pa = phi(a, i), qa = psi(a, i);
  double s = 0.0;
  for (int j = 0; j < model.num_traits(); ++j)
    s += (phi.at_zero(j) - pa) * (psi.at_zero(j) - qa) * model.kernel(i, j) *
         model.traits.weights[j];
  return s * g;
}

Eigen::MatrixXd operator_R(const ModelSpec& model, const TestFunctional& phi,
                           const std::vector<double>& ages) {
  check_traits(model, phi);
  Eigen::MatrixXd out(ages.size(), model.num_traits());
  for (std::size_t k = 0; k < ages.size(); ++k)
    for (int i = 0; i < model.num_traits(); ++i) out(k, i) = apply_R(model, phi, ages[k], i);
  return out;
}

Eigen::MatrixXd operator_R2(const ModelSpec& model, const TestFunctional& phi,
                            const std::vector<double>& ages) {
  check_traits(model, phi);
  Eigen::MatrixXd out(ages.size(), model.num_traits());
  for (std::size_t k = 0; k < ages.size(); ++k)
    for (int i = 0; i < model.num_traits(); ++i) out(k, i) = apply_R2(model, phi, ages[k], i);
  return out;
}

Eigen::MatrixXd operator_Rtilde(const ModelSpec& model, const TestFunctional& phi,
                                const TestFunctional& psi, const std::vector<double>& ages) {
  check_traits(model, phi);
  check_traits(model, psi);
  const auto g1 = phi.grid(), g2 = psi.grid();
  if (!g1.empty() && !g2.empty() && g1 != g2)
    throw GridMismatch("functionals '" + phi.label + "' and '" + psi.label +
                       "' are tabulated on different age grids");
  Eigen::MatrixXd out(ages.size(), model.num_traits());
  for (std::size_t k = 0; k < ages.size(); ++k)
    for (int i = 0; i < model.num_traits(); ++i)
      out(k, i) = apply_Rtilde(model, phi, psi, ages[k], i);
  return out;
}

}  // namespace epiflux
