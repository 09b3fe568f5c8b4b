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

#include "epiflux/fluctuation.hpp"

#include <cmath>
#include <limits>

#include "epiflux/errors.hpp"
#include "epiflux/parallel.hpp"

namespace epiflux {

std::vector<TestFunctional> fluctuation_functionals(const ModelSpec& model) {
  std::vector<TestFunctional> out{TestFunctional::lambda(model)};
  for (int j = 0; j < model.num_traits(); ++j) out.push_back(TestFunctional::gamma_kernel(model, j));
  return out;
}

namespace {

// Linearisation of one step of the cohort scheme around the LLN path.
// With x = (hF, hS(.)) the step reads
//   u_c(n+1) = r_c u_c(n) + a_c hF_n + b_c hF_{n+1}                 (alive c)
//   u_new,j  = uF_j hF_n + uS_j hS_n(j) + cF_j hF_{n+1} + cS_j hS_{n+1}(j)
// and x_{n+1} is read off u(n+1) plus the noise, which couples back through
// b, cF, cS: a (1 + J) implicit system (I - A) x_{n+1} = e.
class Linearisation {
 public:
  Linearisation(const ModelSpec& model, const LlnSolution& lln)
      : model_(model), lln_(lln), g_(lln.grid), path_(replay_cohorts(lln, model)) {}

  const CohortGrid& grid() const { return g_; }
  const CohortPath& path() const { return path_; }

  struct Step {
    int n = 0;
    Eigen::VectorXd r, a, b, f;                 // alive(n)
    Eigen::VectorXd uF, uS, cF, cS, d;          // J
    Eigen::VectorXd lam1;                       // lambda at n+1, alive(n+1)
    Eigen::MatrixXd gk1;                        // gamma K at n+1, alive(n+1) x J
    Eigen::MatrixXd A;                          // (1+J) x (1+J)
    Eigen::FullPivLU<Eigen::MatrixXd> lu;       // of I - A
  };

  // lambda and gamma K tables of the alive cohorts at node k
  void readout(int k, Eigen::VectorXd& lam, Eigen::MatrixXd& gk) const {
    const int alive = g_.alive(k), J = g_.J;
    lam.resize(alive);
    gk.resize(alive, J);
    for (int c = 0; c < alive; ++c) {
      const int th = g_.trait(c), idx = k + g_.offset(c);
      lam[c] = path_.lam(th, idx);
      gk.row(c) = path_.gam(th, idx) * model_.kernel.row(th);
    }
  }

  void build(int n, Step& s) const {
    const int alive = g_.alive(n), J = g_.J, ni = g_.n_init();
    const double al = 0.5 * g_.h, Fn = lln_.F[n], F1 = lln_.F[n + 1];
    const auto& m = path_.mass[n];
    const auto& w = model_.traits.weights;
    s.n = n;
    s.r = path_.survival[n];
    s.a.resize(alive);
    s.b.resize(alive);
    s.f.resize(alive);
    for (int c = 0; c < alive; ++c) {
      const int th = g_.trait(c), idx = n + g_.offset(c);
      const double f = 1.0 + al * F1 * path_.gam(th, idx + 1);
      s.f[c] = f;
      s.a[c] = -m[c] * al * path_.gam(th, idx) / f;
      s.b[c] = -m[c] * s.r[c] * al * path_.gam(th, idx + 1) / f;
    }
    s.uF.resize(J);
    s.uS.resize(J);
    s.cF.resize(J);
    s.cS.resize(J);
    s.d.resize(J);
    for (int j = 0; j < J; ++j) {
      const double g0 = path_.gam(j, 0);
      const double d = 1.0 + al * F1 * g0;
      const double C = path_.mass[n + 1][ni + n * J + j];
      s.d[j] = d;
      s.uF[j] = al * w[j] * lln_.S(n, j) / d;
      s.uS[j] = al * w[j] * Fn / d;
      s.cF[j] = (al * w[j] * lln_.S(n + 1, j) - al * g0 * C) / d;
      s.cS[j] = al * w[j] * F1 / d;
    }
    readout(n + 1, s.lam1, s.gk1);
    s.A.setZero(1 + J, 1 + J);
    s.A(0, 0) = s.lam1.head(alive).dot(s.b);
    s.A.block(1, 0, J, 1) = s.gk1.topRows(alive).transpose() * s.b;
    for (int j = 0; j < J; ++j) {
      const int c = ni + n * J + j;
      s.A(0, 0) += s.lam1[c] * s.cF[j];
      s.A(0, 1 + j) += s.lam1[c] * s.cS[j];
      for (int l = 0; l < J; ++l) {
        s.A(1 + l, 0) += s.gk1(c, l) * s.cF[j];
        s.A(1 + l, 1 + j) += s.gk1(c, l) * s.cS[j];
      }
    }
    s.lu.compute(Eigen::MatrixXd::Identity(1 + J, 1 + J) - s.A);
    if (!(s.lu.rcond() > 1e-13))
      throw SingularStep("implicit fluctuation step " + std::to_string(n) + " (t = " +
                         format_double(g_.time(n + 1)) + ") is singular");
  }

  // Deterministic response u(n) -> u(n+1) given x_n and x_{n+1}.
  void advance(const Step& s, const Eigen::VectorXd& xn, const Eigen::VectorXd& x1,
               Eigen::VectorXd& u) const {
    const int alive = g_.alive(s.n), J = g_.J, ni = g_.n_init();
    for (int c = 0; c < alive; ++c) u[c] = s.r[c] * u[c] + s.a[c] * xn[0] + s.b[c] * x1[0];
    for (int j = 0; j < J; ++j)
      u[ni + s.n * J + j] =
          s.uF[j] * xn[0] + s.uS[j] * xn[1 + j] + s.cF[j] * x1[0] + s.cS[j] * x1[1 + j];
  }

  const ModelSpec& model() const { return model_; }
  const LlnSolution& lln() const { return lln_; }

 private:
  const ModelSpec& model_;
  const LlnSolution& lln_;
  CohortGrid g_;
  CohortPath path_;
};

FluctuationSolution march(const Linearisation& lin, const Eigen::MatrixXd& N) {
  const auto& g = lin.grid();
  const int J = g.J, K = g.steps;
  if (N.rows() != 1 + J || N.cols() != K + 1)
    throw GridMismatch("noise table must hold 1 + J functionals at every solver node");
  FluctuationSolution sol;
  sol.t = lin.lln().t;
  sol.hF.resize(K + 1);
  sol.hS.resize(K + 1, J);
  Eigen::VectorXd u = Eigen::VectorXd::Zero(g.size());
  Eigen::VectorXd x = N.col(0), x1(1 + J), e(1 + J);
  sol.hF[0] = x[0];
  sol.hS.row(0) = x.tail(J).transpose();
  Linearisation::Step s;
  for (int n = 0; n < K; ++n) {
    lin.build(n, s);
    // explicit part: everything but the x_{n+1} terms
    x1.setZero();
    Eigen::VectorXd v = u;
    lin.advance(s, x, x1, v);
    const int alive1 = g.alive(n + 1);
    e[0] = s.lam1.dot(v.head(alive1));
    e.tail(J) = s.gk1.transpose() * v.head(alive1);
    e += N.col(n + 1);
    x1 = s.lu.solve(e);
    lin.advance(s, x, x1, u);
    x = x1;
    sol.hF[n + 1] = x[0];
    sol.hS.row(n + 1) = x.tail(J).transpose();
  }
  const double scale = 1.0 + N.cwiseAbs().maxCoeff();
  sol.budget = (lin.lln().tol + 64 * std::numeric_limits<double>::epsilon()) * (K + 1) * scale;
  return sol;
}

Eigen::MatrixXd combined_noise(const GaussianSampleBatch& b, int r,
                               const std::vector<TestFunctional>& fs, int steps) {
  if (r < 0 || r >= b.replicates) throw GridMismatch("replicate index out of range");
  if (b.num_times() != steps + 1)
    throw GridMismatch("noise batch must be sampled at every solver node");
  for (int k = 0; k <= steps; ++k)
    if (b.nodes[k] != k) throw GridMismatch("noise batch nodes do not match the solver grid");
  Eigen::MatrixXd N(fs.size(), steps + 1);
  for (std::size_t f = 0; f < fs.size(); ++f) {
    const int idx = b.functional_index(fs[f].label);
    if (idx < 0) throw GridMismatch("noise batch lacks functional '" + fs[f].label + "'");
    for (int k = 0; k <= steps; ++k) N(f, k) = b.combined(r, idx, k);
  }
  return N;
}

std::vector<int> nodes_of(const LlnSolution& lln, const std::vector<double>& times) {
  std::vector<int> out;
  for (double t : times) {
    const double x = t / lln.grid.h;
    const long k = std::lround(x);
    if (t < 0 || k > lln.grid.steps || std::abs(x - static_cast<double>(k)) > 1e-7)
      throw GridError("time " + format_double(t) + " is not a node of the solver grid");
    out.push_back(static_cast<int>(k));
  }
  return out;
}

}  // namespace

FluctuationSolution solve_fluctuation(const ModelSpec& model, const LlnSolution& lln,
                                      const Eigen::MatrixXd& noise) {
  Linearisation lin(model, lln);
  return march(lin, noise);
}

FluctuationSolution solve_fluctuation(const ModelSpec& model, const LlnSolution& lln,
                                      const GaussianSampleBatch& noise, int r) {
  const auto N = combined_noise(noise, r, fluctuation_functionals(model), lln.grid.steps);
  auto sol = solve_fluctuation(model, lln, N);
  sol.replicate = r;
  sol.seed = noise.seed;
  return sol;
}

double hat_u_functional(const ModelSpec& model, const LlnSolution& lln,
                        const FluctuationSolution& sol, const GaussianSampleBatch& noise, int r,
                        const TestFunctional& phi, double t) {
  const int f = noise.functional_index(phi.label);
  if (f < 0) throw MissingFunctional("functional '" + phi.label + "' is not in the noise batch");
  const auto& g = lln.grid;
  if (sol.hF.size() != g.steps + 1) throw GridMismatch("solution and LLN grids differ");
  if (phi.num_traits() != g.J) throw GridMismatch("functional '" + phi.label + "' has wrong traits");
  const int k = nodes_of(lln, {t})[0];
  int slot = -1;
  for (int i = 0; i < noise.num_times(); ++i)
    if (noise.nodes[i] == k) slot = i;
  if (slot < 0) throw GridMismatch("noise batch lacks node " + std::to_string(k));

  Linearisation lin(model, lln);
  Eigen::VectorXd u = Eigen::VectorXd::Zero(g.size()), x(1 + g.J), x1(1 + g.J);
  Linearisation::Step s;
  for (int n = 0; n < k; ++n) {
    lin.build(n, s);
    x << sol.hF[n], sol.hS.row(n).transpose();
    x1 << sol.hF[n + 1], sol.hS.row(n + 1).transpose();
    lin.advance(s, x, x1, u);
  }
  double acc = 0.0;
  for (int c = 0; c < g.alive(k); ++c) acc += phi(g.node_age(k + g.offset(c)), g.trait(c)) * u[c];
  return acc + noise.combined(r, f, slot);
}

FluctuationMoments fluctuation_moments(const ModelSpec& model, const LlnSolution& lln,
                                       const std::vector<double>& times, int n,
                                       std::uint64_t seed, int jobs) {
  if (n < 2) throw ConfigError("fluctuation moments need at least two replicates");
  const auto nodes = nodes_of(lln, times);
  const auto& g = lln.grid;
  const int T = static_cast<int>(nodes.size()), J = g.J;
  const auto fs = fluctuation_functionals(model);
  std::vector<int> all(g.steps + 1);
  for (int k = 0; k <= g.steps; ++k) all[k] = k;
  CellNoiseSampler sampler(model, lln, fs, all);
  Linearisation lin(model, lln);
  const std::uint64_t base = sub_seed(seed, StreamTag::gaussian);

  Eigen::MatrixXd X(n, T * (1 + J));  // hF at the times, then hS trait-major
  parallel_for(n, jobs, [&](int r) {
    Rng rng(sub_seed(base, static_cast<std::uint64_t>(r)));
    std::array<Eigen::VectorXd, 4> out;
    sampler.draw(rng, out);
    const Eigen::VectorXd c = out[0] - out[1] + out[2] - out[3];
    using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    const Eigen::MatrixXd N = Eigen::Map<const RowMat>(c.data(), 1 + J, g.steps + 1);
    const auto sol = march(lin, N);
    for (int i = 0; i < T; ++i) {
      X(r, i) = sol.hF[nodes[i]];
      for (int j = 0; j < J; ++j) X(r, T + j * T + i) = sol.hS(nodes[i], j);
    }
  });

  FluctuationMoments mo;
  mo.times = times;
  mo.replicates = n;
  mo.seed = seed;
  const Eigen::MatrixXd D = X.rowwise() - X.colwise().mean();
  auto cov_se = [&](int a, int b, double& cov, double& se) {
    const Eigen::ArrayXd z = D.col(a).array() * D.col(b).array();
    cov = z.sum() / (n - 1);
    const double mz = z.mean();
    se = std::sqrt((z - mz).square().sum() / (n - 1) / n);
  };
  mo.cov_hF.resize(T, T);
  mo.se_hF.resize(T, T);
  for (int a = 0; a < T; ++a)
    for (int b = 0; b < T; ++b) cov_se(a, b, mo.cov_hF(a, b), mo.se_hF(a, b));
  mo.var_hS.resize(T, J);
  mo.se_hS.resize(T, J);
  for (int i = 0; i < T; ++i)
    for (int j = 0; j < J; ++j) {
      const int c = T + j * T + i;
      cov_se(c, c, mo.var_hS(i, j), mo.se_hS(i, j));
    }
  return mo;
}

FluctuationMoments fluctuation_moments_exact(const ModelSpec& model, const LlnSolution& lln,
                                             const std::vector<double>& times) {
  const auto nodes = nodes_of(lln, times);
  Linearisation lin(model, lln);
  const auto& g = lin.grid();
  const auto& path = lin.path();
  const int T = static_cast<int>(nodes.size()), J = g.J, ni = g.n_init();
  const int cols = T * (1 + J);
  const Eigen::MatrixXd kappa = model.kernel * model.traits.weights.asDiagonal();

  Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(g.size(), cols), C = Eigen::MatrixXd::Zero(cols, cols);
  Eigen::VectorXd lam;
  Eigen::MatrixXd gk;
  auto add_targets = [&](int k) {
    bool any = false;
    for (int i = 0; i < T; ++i) any |= nodes[i] == k;
    if (!any) return;
    lin.readout(k, lam, gk);
    const int alive = g.alive(k);
    for (int i = 0; i < T; ++i) {
      if (nodes[i] != k) continue;
      Q.col(i).head(alive) += lam;
      for (int j = 0; j < J; ++j) Q.col(T + j * T + i).head(alive) += gk.col(j);
    }
  };

  Linearisation::Step s;
  Eigen::MatrixXd P, Vq(1 + J, cols), Pn(J, cols), uD;
  for (int n = g.steps - 1; n >= 0; --n) {
    add_targets(n + 1);
    lin.build(n, s);
    const int alive = g.alive(n), alive1 = g.alive(n + 1);
    // p = (I + Y'^T M^-T V^T) q
    Vq.row(0) = s.b.transpose() * Q.topRows(alive);
    for (int j = 0; j < J; ++j) {
      Vq.row(0) += s.cF[j] * Q.row(ni + n * J + j);
      Vq.row(1 + j) = s.cS[j] * Q.row(ni + n * J + j);
    }
    const Eigen::MatrixXd Z = s.lu.transpose().solve(Vq);
    P = Q.topRows(alive1);
    P += s.lam1 * Z.row(0) + s.gk1 * Z.bottomRows(J);

    // death noise D_c and newborn selection noise, both injected at step n
    for (int j = 0; j < J; ++j) Pn.row(j) = P.row(ni + n * J + j) / s.d[j];
    const Eigen::MatrixXd KP = kappa * Pn;  // J x cols: sum_j kappa_ij p_j / d_j
    uD = -P.topRows(alive);
    Eigen::VectorXd varD(alive), W = Eigen::VectorXd::Zero(J);
    const auto& m = path.mass[n];
    for (int c = 0; c < alive; ++c) {
      const int th = g.trait(c);
      varD[c] = std::max(0.0, m[c] * s.r[c] * (1.0 - s.r[c]));
      uD.row(c) += s.f[c] * KP.row(th);
      W[th] += s.f[c] * s.f[c] * varD[c];
    }
    C.noalias() += uD.transpose() * varD.asDiagonal() * uD;
    for (int i = 0; i < J; ++i) {
      if (W[i] == 0.0) continue;
      const Eigen::RowVectorXd kv = KP.row(i);
      C.noalias() += W[i] * (Pn.transpose() * kappa.row(i).asDiagonal() * Pn - kv.transpose() * kv);
    }

    // q_n = R^T p + Y^T U^T p
    Eigen::RowVectorXd u0 = s.a.transpose() * P.topRows(alive);
    Eigen::MatrixXd uS(J, cols);
    for (int j = 0; j < J; ++j) {
      u0 += s.uF[j] * P.row(ni + n * J + j);
      uS.row(j) = s.uS[j] * P.row(ni + n * J + j);
    }
    lin.readout(n, lam, gk);
    Q.setZero();
    Q.topRows(alive) = s.r.asDiagonal() * P.topRows(alive) + lam * u0 + gk * uS;
  }
  add_targets(0);
  const Eigen::VectorXd& m0 = path.m0;
  const Eigen::RowVectorXd mq = m0.transpose() * Q.topRows(ni);
  C.noalias() += Q.topRows(ni).transpose() * m0.asDiagonal() * Q.topRows(ni) - mq.transpose() * mq;

  FluctuationMoments mo;
  mo.times = times;
  mo.cov_hF = C.topLeftCorner(T, T);
  mo.se_hF = Eigen::MatrixXd::Zero(T, T);
  mo.var_hS.resize(T, J);
  for (int i = 0; i < T; ++i)
    for (int j = 0; j < J; ++j) mo.var_hS(i, j) = C(T + j * T + i, T + j * T + i);
  mo.se_hS = Eigen::MatrixXd::Zero(T, J);
  return mo;
}

}  // namespace epiflux
