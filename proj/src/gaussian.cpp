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

#include "epiflux/gaussian.hpp"

#include <cmath>

#include "epiflux/errors.hpp"
#include "epiflux/parallel.hpp"

namespace epiflux {

// ------------------------------------------------------------ kernels

CovarianceKernels::CovarianceKernels(const ModelSpec& model, const LlnSolution& lln)
    : model_(model), lln_(lln), g_(lln.grid) {
  const int K = g_.steps, J = g_.J;
  const double h = g_.h;
  Fm_.resize(K);
  Sm_.resize(K, J);
  for (int n = 0; n < K; ++n) {
    Fm_[n] = 0.5 * (lln.F[n] + lln.F[n + 1]);
    Sm_.row(n) = 0.5 * (lln.S.row(n) + lln.S.row(n + 1));
  }
  H0_ = Eigen::MatrixXd::Zero(g_.n_init(), K + 1);
  for (int c = 0; c < g_.n_init(); ++c) {
    const int j = g_.trait(c);
    const double a0 = g_.node_age(g_.offset(c));
    for (int k = 0; k < K; ++k)
      H0_(c, k + 1) = H0_(c, k) + exposure(lln, model, j, a0 + k * h, k * h, (k + 1) * h);
  }
  G_ = Eigen::MatrixXd::Zero(K * J, K + 1);
  for (int m = 0; m < K; ++m)
    for (int j = 0; j < J; ++j) {
      const int row = m * J + j;
      const double s = (m + 0.5) * h;
      G_(row, m + 1) = exposure(lln, model, j, 0.0, s, (m + 1) * h);
      for (int k = m + 1; k < K; ++k)
        G_(row, k + 1) = G_(row, k) + exposure(lln, model, j, k * h - s, k * h, (k + 1) * h);
    }
  gtri_.resize(J, g_.age_nodes() + 2);
  for (int j = 0; j < J; ++j)
    for (int c = 0; c < gtri_.cols(); ++c) gtri_(j, c) = gamma_tri(j, c * h);
  path_ = replay_cohorts(lln, model);
}

double CovarianceKernels::gamma_tri(int j, double d) const {
  // density (1 - |x|) on [-1, 1]; each half mapped to uniform v by
  // x = 1 - sqrt(1 - v), three-point Gauss-Legendre in v
  static const double v[3] = {0.5 - 0.5 * std::sqrt(0.6), 0.5, 0.5 + 0.5 * std::sqrt(0.6)};
  static const double w[3] = {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};
  const double h = g_.h;
  double s = 0.0;
  for (int q = 0; q < 3; ++q) {
    const double x = 1.0 - std::sqrt(1.0 - v[q]);
    s += 0.5 * w[q] * (model_.gamma[j](d + h * x) + model_.gamma[j](std::max(0.0, d - h * x)));
  }
  return s;
}

int CovarianceKernels::node(double t) const {
  const double x = t / g_.h;
  const long k = std::lround(x);
  if (t < 0 || k > g_.steps || std::abs(x - static_cast<double>(k)) > 1e-7)
    throw GridError("time " + format_double(t) + " is not a node of the solver grid");
  return static_cast<int>(k);
}

Eigen::MatrixXd CovarianceKernels::table(const TestFunctional& phi) const {
  if (phi.num_traits() != g_.J) throw GridMismatch("functional '" + phi.label + "' has wrong traits");
  return tabulate_ages(g_, [&](double a, int j) { return phi(a, j); });
}

double CovarianceKernels::b0101(const Eigen::MatrixXd& P, const Eigen::MatrixXd& Q, int k,
                                int l) const {
  double sxy = 0, sx = 0, sy = 0;
  for (int c = 0; c < g_.n_init(); ++c) {
    const int j = g_.trait(c), i = g_.offset(c);
    const double m = path_.m0[c];
    const double x = P(j, i + k) * std::exp(-H0_(c, k));
    const double y = Q(j, i + l) * std::exp(-H0_(c, l));
    sxy += m * x * y;
    sx += m * x;
    sy += m * y;
  }
  return sxy - sx * sy;
}

double CovarianceKernels::b0202(const Eigen::MatrixXd& P, const Eigen::MatrixXd& Q, int k,
                                int l) const {
  double s = 0;
  const int kl = std::max(k, l);
  for (int c = 0; c < g_.n_init(); ++c) {
    const int j = g_.trait(c), i = g_.offset(c);
    s += path_.m0[c] * P(j, i + k) * Q(j, i + l) *
         (std::exp(-H0_(c, kl)) - std::exp(-H0_(c, k) - H0_(c, l)));
  }
  return s;
}

double CovarianceKernels::b11(const Eigen::MatrixXd& P, const Eigen::MatrixXd& Q, int k,
                              int l) const {
  double s = 0;
  const int J = g_.J;
  for (int j = 0; j < J; ++j)
    for (int m = 0; m < std::min(k, l); ++m) {
      const int row = m * J + j;
      s += model_.traits.weights[j] * P(j, k - m - 1) * Q(j, l - m - 1) *
           std::exp(-G_(row, k) - G_(row, l)) * Sm_(m, j) * Fm_[m];
    }
  return s * g_.h;
}

double CovarianceKernels::b22(const Eigen::MatrixXd& P, const Eigen::MatrixXd& Q, int k,
                              int l) const {
  double s = 0;
  const int J = g_.J, kl = std::max(k, l);
  for (int j = 0; j < J; ++j)
    for (int m = 0; m < std::min(k, l); ++m) {
      const int row = m * J + j;
      s += model_.traits.weights[j] * P(j, k - m - 1) * Q(j, l - m - 1) *
           (std::exp(-G_(row, kl)) - std::exp(-G_(row, k) - G_(row, l))) * Fm_[m] * Sm_(m, j);
    }
  return s * g_.h;
}

// phi on M1 at node k, psi on M2 at node l
double CovarianceKernels::b12(const Eigen::MatrixXd& P, const Eigen::MatrixXd& Q, int k,
                              int l) const {
  const int J = g_.J;
  const double h = g_.h;
  const auto& w = model_.traits.weights;
  double s = 0;
  for (int n = 0; n < std::min(k, l); ++n)
    for (int th = 0; th < J; ++th) {
      const double outer = w[th] * P(th, k - n - 1) * Fm_[n] * std::exp(-G_(n * J + th, k));
      if (outer == 0.0) continue;
      double inner = 0;
      for (int tt = 0; tt < J; ++tt) {
        const double kw = w[tt] * model_.kernel(tt, th);
        if (kw == 0.0) continue;
        double acc = 0;
        for (int m = 0; m < n; ++m)
          acc += Q(tt, l - m - 1) * gtri_(tt, n - m) * Fm_[m] * Sm_(m, tt) *
                 std::exp(-G_(m * J + tt, l));
        // same-cell triangle a < s, centroid rule
        acc += 0.5 * Q(tt, l - n - 1) * model_.gamma[tt](h / 3.0) * Fm_[n] * Sm_(n, tt) *
               std::exp(-G_(n * J + tt, l));
        inner += kw * acc;
      }
      s += outer * inner;
    }
  return s * h * h;
}

// phi on M1 at node k, psi on M02 at node l
double CovarianceKernels::b102(const Eigen::MatrixXd& P, const Eigen::MatrixXd& Q, int k,
                               int l) const {
  const int J = g_.J;
  const double h = g_.h;
  const auto& w = model_.traits.weights;
  double s = 0;
  for (int n = 0; n < std::min(k, l); ++n)
    for (int th = 0; th < J; ++th) {
      const double outer = w[th] * P(th, k - n - 1) * Fm_[n] * std::exp(-G_(n * J + th, k));
      if (outer == 0.0) continue;
      double inner = 0;
      for (int c = 0; c < g_.n_init(); ++c) {
        const int tt = g_.trait(c), i = g_.offset(c);
        const double kk = model_.kernel(tt, th);
        if (kk == 0.0) continue;
        inner += path_.m0[c] * kk * Q(tt, i + l) * gtri_(tt, i + n + 1) * std::exp(-H0_(c, l));
      }
      s += outer * inner;
    }
  return s * h;
}

double CovarianceKernels::cov_M(const std::string& block, const TestFunctional& phi,
                                const TestFunctional& psi, double t, double t2) const {
  static const char* zeros[] = {"01-02", "02-01", "1-01", "01-1", "2-01", "01-2", "2-02", "02-2"};
  for (const char* z : zeros)
    if (block == z) {
      node(t), node(t2);
      return 0.0;
    }
  if (block == "2-1") return cov_M("1-2", psi, phi, t2, t);
  if (block == "02-1") return cov_M("1-02", psi, phi, t2, t);
  const int k = node(t), l = node(t2);
  const auto P = table(phi), Q = table(psi);
  if (block == "01-01") return b0101(P, Q, k, l);
  if (block == "02-02") return b0202(P, Q, k, l);
  if (block == "1-1") return b11(P, Q, k, l);
  if (block == "2-2") return b22(P, Q, k, l);
  if (block == "1-2") return b12(P, Q, k, l);
  if (block == "1-02") return b102(P, Q, k, l);
  throw UnknownBlock("unknown covariance block '" + block + "'");
}

double CovarianceKernels::cov_W(const TestFunctional& phi, const TestFunctional& psi, double t,
                                double t2) const {
  const double tm = std::min(t, t2);
  if (tm < 0 || std::max(t, t2) > lln_.horizon() * (1 + 1e-12) + 1e-12)
    throw GridError("cov_W time outside the solved horizon");
  const auto R = tabulate_ages(g_, [&](double a, int j) { return apply_Rtilde(model_, phi, psi, a, j); });
  auto integrand = [&](int n) {
    const auto& m = path_.mass[n];
    double s = 0;
    for (int c = 0; c < g_.alive(n); ++c) s += R(g_.trait(c), n + g_.offset(c)) * m[c];
    return lln_.F[n] * s;
  };
  const double x = tm / g_.h;
  const int kmax = std::min(static_cast<int>(std::floor(x + 1e-9)), g_.steps);
  double acc = 0, prev = integrand(0);
  for (int n = 0; n < kmax; ++n) {
    const double next = integrand(n + 1);
    acc += 0.5 * g_.h * (prev + next);
    prev = next;
  }
  const double frac = x - kmax;
  if (frac > 1e-9 && kmax < g_.steps) {
    const double next = integrand(kmax + 1);
    acc += frac * g_.h * (prev + 0.5 * frac * (next - prev));
  }
  return acc;
}

double cov_M(const ModelSpec& model, const LlnSolution& lln, const std::string& block,
             const TestFunctional& phi, const TestFunctional& psi, double t, double t2) {
  return CovarianceKernels(model, lln).cov_M(block, phi, psi, t, t2);
}

double cov_W(const ModelSpec& model, const LlnSolution& lln, const TestFunctional& phi,
             const TestFunctional& psi, double t, double t2) {
  return CovarianceKernels(model, lln).cov_W(phi, psi, t, t2);
}

// ------------------------------------------------------------ cell sampler

CellNoiseSampler::CellNoiseSampler(const ModelSpec& model, const LlnSolution& lln,
                                   const std::vector<TestFunctional>& functionals,
                                   std::vector<int> nodes)
    : model_(model), lln_(lln), path_(replay_cohorts(lln, model)), nodes_(std::move(nodes)) {
  for (const auto& f : functionals) {
    if (f.num_traits() != model.num_traits())
      throw GridMismatch("functional '" + f.label + "' has wrong traits");
    tables_.push_back(tabulate_ages(lln.grid, [&](double a, int j) { return f(a, j); }));
  }
  slot_.assign(lln.grid.steps + 1, -1);
  for (std::size_t i = 0; i < nodes_.size(); ++i) slot_[nodes_[i]] = static_cast<int>(i);
}

void CellNoiseSampler::draw(Rng& rng, std::array<Eigen::VectorXd, 4>& out) const {
  const auto& g = lln_.grid;
  const int J = g.J, ni = g.n_init();
  const int nf = static_cast<int>(tables_.size()), nt = static_cast<int>(nodes_.size());
  const double alpha = 0.5 * g.h;
  const auto& w = model_.traits.weights;
  for (auto& o : out) o = Eigen::VectorXd::Zero(nf * nt);

  Eigen::VectorXd X(ni), Y = Eigen::VectorXd::Zero(g.size()), Z = Eigen::VectorXd::Zero(g.size());
  // zero-sum multinomial fluctuation of the initial cells
  double G = 0;
  for (int c = 0; c < ni; ++c) {
    X[c] = std::sqrt(path_.m0[c]) * rng.normal();
    G += X[c];
  }
  for (int c = 0; c < ni; ++c) X[c] -= path_.m0[c] * G;

  auto record = [&](int k) {
    const int slot = slot_[k];
    if (slot < 0) return;
    for (int f = 0; f < nf; ++f) {
      const auto& P = tables_[f];
      double m01 = 0, m02 = 0, m1 = 0, m2 = 0;
      for (int c = 0; c < ni; ++c) {
        const double p = P(g.trait(c), k + g.offset(c));
        m01 += p * X[c];
        m02 += p * Y[c];
      }
      for (int c = ni; c < g.alive(k); ++c) {
        const double p = P(g.trait(c), k + g.offset(c));
        m1 += p * Z[c];
        m2 += p * Y[c];
      }
      out[0][f * nt + slot] = m01;
      out[1][f * nt + slot] = m02;
      out[2][f * nt + slot] = m1;
      out[3][f * nt + slot] = m2;
    }
  };
  record(0);

  Eigen::VectorXd A(J), W(J), eta(J), gsel(J);
  for (int n = 0; n < g.steps; ++n) {
    const int alive = g.alive(n);
    const auto& r = path_.survival[n];
    const auto& m = path_.mass[n];
    const double F1 = lln_.F[n + 1];
    A.setZero();
    W.setZero();
    for (int c = 0; c < alive; ++c) {
      const int th = g.trait(c);
      const double var = std::max(0.0, m[c] * r[c] * (1.0 - r[c]));
      const double D = std::sqrt(var) * rng.normal();
      const double fac = 1.0 + alpha * F1 * path_.gam(th, n + 1 + g.offset(c));
      A[th] += fac * D;
      W[th] += fac * fac * var;
      Y[c] = Y[c] * r[c] + D;
      if (c < ni)
        X[c] *= r[c];
      else
        Z[c] *= r[c];
    }
    // trait selection of the newborns: zero-sum multinomial noise per source
    eta.setZero();
    for (int i = 0; i < J; ++i) {
      double Gs = 0;
      for (int j = 0; j < J; ++j) {
        gsel[j] = std::sqrt(model_.kernel(i, j) * w[j]) * rng.normal();
        Gs += gsel[j];
      }
      const double sw = std::sqrt(W[i]);
      for (int j = 0; j < J; ++j) eta[j] += sw * (gsel[j] - model_.kernel(i, j) * w[j] * Gs);
    }
    for (int j = 0; j < J; ++j) {
      double b = eta[j];
      for (int i = 0; i < J; ++i) b += model_.kernel(i, j) * w[j] * A[i];
      Z[ni + n * J + j] = b / (1.0 + alpha * F1 * path_.gam(j, 0));
    }
    record(n + 1);
  }
}

// ------------------------------------------------------------ batches

int GaussianSampleBatch::functional_index(const std::string& label) const {
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] == label) return static_cast<int>(i);
  return -1;
}

double GaussianSampleBatch::combined(int r, int f, int i) const {
  return value(NoiseBlock::m01, r, f, i) - value(NoiseBlock::m02, r, f, i) +
         value(NoiseBlock::m1, r, f, i) - value(NoiseBlock::m2, r, f, i);
}

GaussianSampleBatch GaussianSampleBatch::scaled(double c) const {
  GaussianSampleBatch b = *this;
  for (auto& m : b.M) m *= c;
  return b;
}

namespace {

Eigen::MatrixXd factor_with_jitter(Eigen::MatrixXd C, const GaussianOptions& opt, double& used) {
  C = 0.5 * (C + C.transpose());
  const double scale = std::max(C.diagonal().mean(), 1e-300);
  Eigen::LLT<Eigen::MatrixXd> llt(C);
  used = 0.0;
  if (llt.info() == Eigen::Success) return llt.matrixL();
  for (double j = opt.jitter_start; j <= opt.jitter_max * (1 + 1e-9); j *= 10.0) {
    Eigen::MatrixXd Cj = C;
    Cj.diagonal().array() += j * scale;
    llt.compute(Cj);
    if (llt.info() == Eigen::Success) {
      used = std::max(used, j);
      return llt.matrixL();
    }
  }
  throw FactorizationError("covariance not positive semidefinite up to relative jitter " +
                           format_double(opt.jitter_max));
}

}  // namespace

GaussianSampleBatch sample_gaussian(const ModelSpec& model, const LlnSolution& lln,
                                    const std::vector<TestFunctional>& functionals,
                                    const std::vector<double>& times, int n, std::uint64_t seed,
                                    const GaussianOptions& opt) {
  if (n < 1) throw ConfigError("need at least one replicate");
  CovarianceKernels probe_grid(model, lln);
  GaussianSampleBatch b;
  if (times.empty()) {
    for (int k = 0; k <= lln.grid.steps; ++k) b.nodes.push_back(k);
  } else {
    for (double t : times) b.nodes.push_back(probe_grid.node(t));
  }
  for (int k : b.nodes) b.times.push_back(lln.grid.time(k));
  for (const auto& f : functionals) b.labels.push_back(f.label);
  b.replicates = n;
  b.seed = seed;
  b.method = opt.method;
  const int nf = static_cast<int>(functionals.size()), nt = static_cast<int>(b.nodes.size());
  for (auto& m : b.M) m.resize(n, nf * nt);
  const std::uint64_t base = sub_seed(seed, StreamTag::gaussian);

  if (opt.method == "cells") {
    CellNoiseSampler sampler(model, lln, functionals, b.nodes);
    parallel_for(n, opt.jobs, [&](int r) {
      Rng rng(sub_seed(base, static_cast<std::uint64_t>(r)));
      std::array<Eigen::VectorXd, 4> out;
      sampler.draw(rng, out);
      for (int k = 0; k < 4; ++k) b.M[k].row(r) = out[k].transpose();
    });
    return b;
  }
  if (opt.method != "cholesky") throw ConfigError("unknown sampling method '" + opt.method + "'");

  const auto& K = probe_grid;
  const int d = nf * nt;
  Eigen::MatrixXd C0(d, d), C(3 * d, 3 * d);
  C.setZero();
  for (int f = 0; f < nf; ++f)
    for (int i = 0; i < nt; ++i)
      for (int gq = 0; gq < nf; ++gq)
        for (int l = 0; l < nt; ++l) {
          const auto& P = functionals[f];
          const auto& Q = functionals[gq];
          const double t = b.times[i], t2 = b.times[l];
          const int a = f * nt + i, c = gq * nt + l;
          C0(a, c) = K.cov_M("01-01", P, Q, t, t2);
          C(a, c) = K.cov_M("02-02", P, Q, t, t2);
          C(d + a, d + c) = K.cov_M("1-1", P, Q, t, t2);
          C(2 * d + a, 2 * d + c) = K.cov_M("2-2", P, Q, t, t2);
          const double c12 = K.cov_M("1-2", P, Q, t, t2);
          C(d + a, 2 * d + c) = c12;
          C(2 * d + c, d + a) = c12;
          const double c102 = K.cov_M("1-02", P, Q, t, t2);
          C(d + a, c) = c102;
          C(c, d + a) = c102;
        }
  double j0 = 0, j1 = 0;
  const Eigen::MatrixXd L0 = factor_with_jitter(C0, opt, j0);
  const Eigen::MatrixXd L = factor_with_jitter(C, opt, j1);
  b.jitter = std::max(j0, j1);
  parallel_for(n, opt.jobs, [&](int r) {
    Rng rng(sub_seed(base, static_cast<std::uint64_t>(r)));
    Eigen::VectorXd z0(d), z(3 * d);
    for (int i = 0; i < d; ++i) z0[i] = rng.normal();
    for (int i = 0; i < 3 * d; ++i) z[i] = rng.normal();
    const Eigen::VectorXd x0 = L0 * z0, x = L * z;
    b.M[0].row(r) = x0.transpose();
    b.M[1].row(r) = x.segment(0, d).transpose();
    b.M[2].row(r) = x.segment(d, d).transpose();
    b.M[3].row(r) = x.segment(2 * d, d).transpose();
  });
  return b;
}

}  // namespace epiflux
