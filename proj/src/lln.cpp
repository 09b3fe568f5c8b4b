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

#include "epiflux/lln.hpp"

#include <algorithm>
#include <cmath>

#include "epiflux/errors.hpp"

namespace epiflux {

Eigen::MatrixXd tabulate_ages(const CohortGrid& grid,
                              const std::function<double(double, int)>& f) {
  Eigen::MatrixXd tab(grid.J, grid.age_nodes());
  for (int j = 0; j < grid.J; ++j)
    for (int idx = 0; idx < grid.age_nodes(); ++idx) tab(j, idx) = f(grid.node_age(idx), j);
  return tab;
}

namespace {

int age_index(const CohortGrid& g, int c, int k) { return k + g.offset(c); }

// One step n -> n+1 of the cohort scheme:
//   m_c(n+1) = m_c(n) (1 - a F_n g_c(n)) / (1 + a F_{n+1} g_c(n+1)),   a = h/2,
//   births B_j = a (F_n S_n(j) + F_{n+1} S_{n+1}(j)) w_j, newborn mass
//   C_j = B_j / (1 + a F_{n+1} gamma(h/2, j)).
class Stepper {
 public:
  Stepper(const ModelSpec& model, const CohortGrid& g)
      : model_(model), g_(g), J_(g.J), alpha_(0.5 * g.h) {
    lam_ = tabulate_ages(g, [&](double a, int j) { return model.lambda[j](a); });
    gam_ = tabulate_ages(g, [&](double a, int j) { return model.gamma[j](a); });
  }

  const Eigen::MatrixXd& lam() const { return lam_; }
  const Eigen::MatrixXd& gam() const { return gam_; }

  void initial_sums(const Eigen::VectorXd& m, double& F, Eigen::VectorXd& S) const {
    Eigen::VectorXd T = Eigen::VectorXd::Zero(J_);
    F = 0.0;
    for (int c = 0; c < g_.n_init(); ++c) {
      const int th = g_.trait(c);
      const int idx = age_index(g_, c, 0);
      F += lam_(th, idx) * m[c];
      T[th] += gam_(th, idx) * m[c];
    }
    S = model_.kernel.transpose() * T;
  }

  // Prepares the F_{n+1}-independent parts of step n.
  void prepare(int n, const Eigen::VectorXd& m, double Fn) {
    const int alive = g_.alive(n);
    a_.resize(alive);
    g1_.resize(alive);
    l1_.resize(alive);
    for (int c = 0; c < alive; ++c) {
      const int th = g_.trait(c);
      const int idx = age_index(g_, c, n);
      a_[c] = m[c] * (1.0 - alpha_ * Fn * gam_(th, idx));
      g1_[c] = gam_(th, idx + 1);
      l1_[c] = lam_(th, idx + 1);
    }
  }

  // Right-hand side for a guess (F1, S1); optionally writes the masses.
  void evaluate(int n, double Fn, const Eigen::VectorXd& Sn, double F1, const Eigen::VectorXd& S1,
                double& Fout, Eigen::VectorXd& Sout, Eigen::VectorXd* m_out) const {
    const int alive = static_cast<int>(a_.size());
    Eigen::VectorXd T = Eigen::VectorXd::Zero(J_);
    double f = 0.0;
    for (int c = 0; c < alive; ++c) {
      const double mn = a_[c] / (1.0 + alpha_ * F1 * g1_[c]);
      f += l1_[c] * mn;
      T[g_.trait(c)] += g1_[c] * mn;
      if (m_out) (*m_out)[c] = mn;
    }
    const auto& w = model_.traits.weights;
    for (int j = 0; j < J_; ++j) {
      const double B = alpha_ * (Fn * Sn[j] + F1 * S1[j]) * w[j];
      const double C = B / (1.0 + alpha_ * F1 * gam_(j, 0));
      f += lam_(j, 0) * C;
      T[j] += gam_(j, 0) * C;
      if (m_out) (*m_out)[g_.n_init() + n * J_ + j] = C;
    }
    (void)n;
    Fout = f;
    Sout = model_.kernel.transpose() * T;
  }

  const Eigen::VectorXd& survival_numerators() const { return a_; }
  const Eigen::VectorXd& g1() const { return g1_; }

 private:
  const ModelSpec& model_;
  CohortGrid g_;
  int J_;
  double alpha_;
  Eigen::MatrixXd lam_, gam_;
  Eigen::VectorXd a_, g1_, l1_;
};

CohortGrid make_grid(const ModelSpec& model, const LlnOptions& opt, double& a0_max) {
  if (!(opt.dt > 0) || !(opt.horizon > 0)) throw GridError("horizon and dt must be positive");
  if (!(opt.tol > 0)) throw ConfigError("tol must be positive");
  CohortGrid g;
  g.J = model.num_traits();
  g.steps = static_cast<int>(std::ceil(opt.horizon / opt.dt - 1e-9));
  g.h = opt.horizon / g.steps;
  a0_max = model.initial_age.tail_point(opt.tail_mass);
  const double cells = std::ceil(a0_max / g.h + 1e-9);
  if (cells > 2e6) throw GridError("initial age truncation needs too many cells");
  g.cells = std::max(1, static_cast<int>(cells));
  a0_max = g.cells * g.h;
  return g;
}

Eigen::VectorXd cell_masses(const ModelSpec& model, const CohortGrid& g) {
  Eigen::VectorXd cm(g.cells);
  double prev = 0.0;  // P(a_0 < 0) = 0
  for (int i = 0; i < g.cells; ++i) {
    const double next = (i + 1 == g.cells) ? 1.0 : model.initial_age.cdf((i + 1) * g.h);
    cm[i] = std::max(0.0, next - prev);
    prev = next;
  }
  return cm;
}

Eigen::VectorXd initial_masses(const ModelSpec& model, const CohortGrid& g,
                               const Eigen::VectorXd& cm) {
  Eigen::VectorXd m = Eigen::VectorXd::Zero(g.size());
  for (int i = 0; i < g.cells; ++i)
    for (int j = 0; j < g.J; ++j) m[i * g.J + j] = cm[i] * model.trait_probs[j];
  return m;
}

}  // namespace

LlnSolution solve_lln(const ModelSpec& model, const LlnOptions& opt) {
  LlnSolution sol;
  sol.grid = make_grid(model, opt, sol.a0_max);
  const auto& g = sol.grid;
  const int J = g.J;
  sol.tail_mass = opt.tail_mass;
  sol.tol = opt.tol;
  sol.model_digest = model.digest;
  sol.cell_mass = cell_masses(model, g);
  sol.t = Eigen::VectorXd::LinSpaced(g.steps + 1, 0.0, g.h * g.steps);
  sol.F.resize(g.steps + 1);
  sol.S.resize(g.steps + 1, J);

  Stepper st(model, g);
  Eigen::VectorXd m = initial_masses(model, g, sol.cell_mass);
  double F0;
  Eigen::VectorXd S0;
  st.initial_sums(m, F0, S0);
  sol.F[0] = F0;
  sol.S.row(0) = S0.transpose();

  Eigen::VectorXd Sn = S0, S1(J), Snew(J);
  for (int n = 0; n < g.steps; ++n) {
    const double Fn = sol.F[n];
    st.prepare(n, m, Fn);
    double F1 = Fn, Fnew = Fn;
    S1 = Sn;
    double diff = INFINITY;
    int it = 0;
    while (diff >= opt.tol) {
      if (it == opt.max_iters)
        throw NonConvergence("Picard iteration stalled at t = " + format_double(g.time(n + 1)) +
                             ", last update " + format_double(diff));
      st.evaluate(n, Fn, Sn, F1, S1, Fnew, Snew, nullptr);
      diff = std::max(std::abs(Fnew - F1), (Snew - S1).cwiseAbs().maxCoeff());
      F1 = Fnew;
      S1 = Snew;
      ++it;
    }
    sol.residual = std::max(sol.residual, diff);
    sol.max_picard = std::max(sol.max_picard, it);
    // commit the masses at the accepted iterate
    st.evaluate(n, Fn, Sn, F1, S1, Fnew, Snew, &m);
    sol.F[n + 1] = F1;
    sol.S.row(n + 1) = S1.transpose();
    Sn = S1;
  }
  return sol;
}

ResidualReport lln_residual(const LlnSolution& sol, const ModelSpec& model) {
  const auto& g = sol.grid;
  Stepper st(model, g);
  Eigen::VectorXd m = initial_masses(model, g, sol.cell_mass);
  ResidualReport rep;
  double F0;
  Eigen::VectorXd S0, Fn_S, S1, Sout;
  st.initial_sums(m, F0, S0);
  rep.F = std::abs(F0 - sol.F[0]);
  rep.S = (S0 - sol.S.row(0).transpose()).cwiseAbs().maxCoeff();
  for (int n = 0; n < g.steps; ++n) {
    st.prepare(n, m, sol.F[n]);
    Fn_S = sol.S.row(n).transpose();
    S1 = sol.S.row(n + 1).transpose();
    double Fout;
    st.evaluate(n, sol.F[n], Fn_S, sol.F[n + 1], S1, Fout, Sout, &m);
    rep.F = std::max(rep.F, std::abs(Fout - sol.F[n + 1]));
    rep.S = std::max(rep.S, (Sout - S1).cwiseAbs().maxCoeff());
  }
  return rep;
}

CohortPath replay_cohorts(const LlnSolution& sol, const ModelSpec& model) {
  const auto& g = sol.grid;
  Stepper st(model, g);
  CohortPath path;
  path.grid = g;
  path.lam = st.lam();
  path.gam = st.gam();
  Eigen::VectorXd m = initial_masses(model, g, sol.cell_mass);
  path.m0 = m.head(g.n_init());
  path.mass.reserve(g.steps + 1);
  path.survival.reserve(g.steps);
  path.mass.push_back(m.head(g.alive(0)));
  Eigen::VectorXd Sn, S1, Sout;
  const double alpha = 0.5 * g.h;
  for (int n = 0; n < g.steps; ++n) {
    st.prepare(n, m, sol.F[n]);
    Sn = sol.S.row(n).transpose();
    S1 = sol.S.row(n + 1).transpose();
    double Fout;
    st.evaluate(n, sol.F[n], Sn, sol.F[n + 1], S1, Fout, Sout, &m);
    // survival factors recomputed directly so zero-mass cohorts are covered
    const int alive = g.alive(n);
    Eigen::VectorXd r(alive);
    for (int c = 0; c < alive; ++c) {
      const int th = g.trait(c);
      const int idx = n + g.offset(c);
      r[c] = (1.0 - alpha * sol.F[n] * path.gam(th, idx)) /
             (1.0 + alpha * sol.F[n + 1] * path.gam(th, idx + 1));
    }
    path.survival.push_back(std::move(r));
    path.mass.push_back(m.head(g.alive(n + 1)));
  }
  return path;
}

double interp_F(const LlnSolution& sol, double t) {
  const double T = sol.horizon();
  if (t < 0 || t > T * (1 + 1e-12) + 1e-12)
    throw GridError("time " + format_double(t) + " outside the solved horizon");
  const double x = std::clamp(t / sol.grid.h, 0.0, static_cast<double>(sol.grid.steps));
  const int k = std::min(static_cast<int>(x), sol.grid.steps - 1);
  const double f = x - k;
  return (1 - f) * sol.F[k] + f * sol.F[k + 1];
}

double interp_S(const LlnSolution& sol, double t, int j) {
  const double T = sol.horizon();
  if (t < 0 || t > T * (1 + 1e-12) + 1e-12)
    throw GridError("time " + format_double(t) + " outside the solved horizon");
  const double x = std::clamp(t / sol.grid.h, 0.0, static_cast<double>(sol.grid.steps));
  const int k = std::min(static_cast<int>(x), sol.grid.steps - 1);
  const double f = x - k;
  return (1 - f) * sol.S(k, j) + f * sol.S(k + 1, j);
}

double exposure(const LlnSolution& sol, const ModelSpec& model, int j, double age0, double r0,
                double r1) {
  if (r1 <= r0) return 0.0;
  const double h = sol.grid.h;
  std::vector<double> cuts{r0, r1};
  for (int k = static_cast<int>(std::floor(r0 / h)) + 1; k * h < r1; ++k) cuts.push_back(k * h);
  for (double b : model.gamma[j].breakpoints()) {
    const double r = r0 + b - age0;
    if (r > r0 && r < r1) cuts.push_back(r);
  }
  std::sort(cuts.begin(), cuts.end());
  static const double q = 0.5 / std::sqrt(3.0);
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double x = cuts[i], y = cuts[i + 1];
    if (y <= x) continue;
    const double mid = 0.5 * (x + y), len = y - x;
    const double u = mid - q * len, v = mid + q * len;
    total += 0.5 * len *
             (interp_F(sol, u) * model.gamma[j](age0 + u - r0) +
              interp_F(sol, v) * model.gamma[j](age0 + v - r0));
  }
  return total;
}

double density(const LlnSolution& sol, const ModelSpec& model, double t, double a, int j) {
  if (t > sol.horizon() * (1 + 1e-12) + 1e-12)
    throw GridError("density requested beyond the solved horizon");
  const double w = model.traits.weights[j];
  if (w <= 0.0) return 0.0;
  if (a > t) {
    const double a0 = a - t;
    return model.initial_age.pdf(a0) * model.trait_probs[j] / w *
           std::exp(-exposure(sol, model, j, a0, 0.0, t));
  }
  const double s = t - a;
  return interp_F(sol, s) * interp_S(sol, s, j) * std::exp(-exposure(sol, model, j, 0.0, s, t));
}

}  // namespace epiflux
