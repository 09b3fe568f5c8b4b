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

#include "epiflux/stats.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/special_functions/gamma.hpp>

namespace epiflux::stats {

double mean(const Eigen::Ref<const Eigen::VectorXd>& x) { return x.mean(); }

double variance(const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (x.size() < 2) return 0.0;
  return (x.array() - x.mean()).square().sum() / (x.size() - 1);
}

double stderr_mean(const Eigen::Ref<const Eigen::VectorXd>& x) {
  return x.size() < 2 ? 0.0 : std::sqrt(variance(x) / x.size());
}

CovEstimate covariance(const Eigen::Ref<const Eigen::VectorXd>& x,
                       const Eigen::Ref<const Eigen::VectorXd>& y) {
  const auto n = x.size();
  CovEstimate c;
  if (n < 2) return c;
  const Eigen::ArrayXd z = (x.array() - x.mean()) * (y.array() - y.mean());
  c.cov = z.sum() / (n - 1);
  c.se = std::sqrt((z - z.mean()).square().sum() / (n - 1) / n);
  return c;
}

double kolmogorov_sf(double x) {
  if (x <= 0) return 1.0;
  if (x < 0.3) {
    // the alternating series converges slowly here; use the theta-dual form
    // P(sup|B| <= x) = sqrt(2 pi)/x sum exp(-(2k-1)^2 pi^2 / (8 x^2))
    const double pi2 = M_PI * M_PI;
    double s = 0.0;
    for (int k = 1; k < 50; ++k) s += std::exp(-(2.0 * k - 1) * (2.0 * k - 1) * pi2 / (8 * x * x));
    return std::clamp(1.0 - std::sqrt(2 * M_PI) / x * s, 0.0, 1.0);
  }
  double s = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * x * x);
    s += (k % 2 ? 1.0 : -1.0) * term;
    if (term < 1e-17) break;
  }
  return std::clamp(2.0 * s, 0.0, 1.0);
}

KsResult ks_normal(const Eigen::Ref<const Eigen::VectorXd>& x, double mu, double var) {
  KsResult r;
  const auto n = x.size();
  if (n == 0 || !(var > 0)) return r;
  std::vector<double> v(x.data(), x.data() + n);
  std::sort(v.begin(), v.end());
  const boost::math::normal_distribution<double> law(mu, std::sqrt(var));
  for (Eigen::Index i = 0; i < n; ++i) {
    const double F = boost::math::cdf(law, v[i]);
    r.D = std::max({r.D, (i + 1.0) / n - F, F - static_cast<double>(i) / n});
  }
  r.p = kolmogorov_sf(std::sqrt(static_cast<double>(n)) * r.D);
  return r;
}

LineFit fit_line(const Eigen::Ref<const Eigen::VectorXd>& x,
                 const Eigen::Ref<const Eigen::VectorXd>& y) {
  LineFit f;
  const auto n = x.size();
  const double mx = x.mean(), my = y.mean();
  const Eigen::ArrayXd dx = x.array() - mx, dy = y.array() - my;
  const double sxx = dx.square().sum();
  f.slope = (dx * dy).sum() / sxx;
  f.intercept = my - f.slope * mx;
  if (n > 2) {
    const double rss = (dy - f.slope * dx).square().sum();
    f.slope_se = std::sqrt(rss / (n - 2) / sxx);
  }
  return f;
}

namespace {

double chi2_sf(double stat, int dof) {
  return dof > 0 ? boost::math::gamma_q(0.5 * dof, 0.5 * stat) : 1.0;
}

}  // namespace

ChiSquare chi_square(const std::vector<long>& counts, const std::vector<double>& probs) {
  ChiSquare c;
  long n = 0;
  for (long k : counts) n += k;
  int cells = 0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (probs[i] <= 0) {
      if (counts[i] > 0) {
        c.stat = INFINITY;
        c.p = 0.0;
        return c;
      }
      continue;
    }
    const double e = n * probs[i];
    c.stat += (counts[i] - e) * (counts[i] - e) / e;
    ++cells;
  }
  c.dof = cells - 1;
  c.p = chi2_sf(c.stat, c.dof);
  return c;
}

ChiSquare chi_square_two_sample(const std::vector<long>& a, const std::vector<long>& b) {
  ChiSquare c;
  double na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    na += a[i];
    nb += b[i];
  }
  int cells = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double tot = a[i] + b[i];
    if (tot == 0) continue;
    const double ea = tot * na / (na + nb), eb = tot * nb / (na + nb);
    c.stat += (a[i] - ea) * (a[i] - ea) / ea + (b[i] - eb) * (b[i] - eb) / eb;
    ++cells;
  }
  c.dof = cells - 1;
  c.p = chi2_sf(c.stat, c.dof);
  return c;
}

}  // namespace epiflux::stats
