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

// epiflux command line tool: one subcommand per pipeline, every run writes
// CSV artifacts plus manifest.json into --out (error.json on failure).

#include <CLI11.hpp>

#include <cmath>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "epiflux/config.hpp"
#include "epiflux/errors.hpp"
#include "epiflux/fluctuation.hpp"
#include "epiflux/gaussian.hpp"
#include "epiflux/io.hpp"
#include "epiflux/lln.hpp"
#include "epiflux/model.hpp"
#include "epiflux/parallel.hpp"
#include "epiflux/pdmp.hpp"
#include "epiflux/stats.hpp"
#include "epiflux/verification.hpp"

using namespace epiflux;

namespace {

struct Flags {
  std::string config, out = "out";
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs, n, reps;
  std::optional<double> dt, horizon;
  bool quiet = false;
};

// Everything a pipeline needs, with command line overrides folded into the
// config so that the digest describes what actually ran.
struct Setup {
  Config cfg;
  ModelSpec model;
  LlnOptions lln;
  int N = 1000, reps = 1, jobs = 1;
  std::uint64_t seed = 1;
  bool quiet = false;
};

Setup prepare(const Flags& f) {
  Setup s;
  s.cfg = Config::from_file(f.config);
  if (f.horizon) s.cfg.set("solver", "horizon", *f.horizon);
  if (f.dt) s.cfg.set("solver", "dt", *f.dt);
  if (f.n) s.cfg.set("run", "N", std::to_string(*f.n));
  if (f.reps) s.cfg.set("run", "reps", std::to_string(*f.reps));
  if (f.seed) s.cfg.set("run", "seed", std::to_string(*f.seed));
  s.model = build_model(s.cfg);
  s.lln.horizon = s.cfg.get_double("solver", "horizon", 8.0);
  s.lln.dt = s.cfg.get_double("solver", "dt", 0.05);
  s.lln.tol = s.cfg.get_double("solver", "tol", s.lln.tol);
  s.lln.max_iters = static_cast<int>(s.cfg.get_int("solver", "max_iters", s.lln.max_iters));
  s.lln.tail_mass = s.cfg.get_double("solver", "tail_mass", s.lln.tail_mass);
  s.N = static_cast<int>(s.cfg.get_int("run", "N", 1000));
  s.reps = static_cast<int>(s.cfg.get_int("run", "reps", 1));
  s.seed = static_cast<std::uint64_t>(s.cfg.get_int("run", "seed", 1));
  if (s.N < 1) throw ConfigError("[run] N must be positive");
  if (s.reps < 1) throw ConfigError("[run] reps must be positive");
  if (f.jobs) {
    s.jobs = *f.jobs;
  } else {
    s.jobs = default_jobs();  // EPIFLUX_JOBS, else 1
  }
  s.jobs = std::max(1, s.jobs);
  s.quiet = f.quiet;
  return s;
}

std::vector<std::string> trait_columns(const ModelSpec& m, const std::string& prefix) {
  std::vector<std::string> c;
  for (const auto& l : m.traits.labels) c.push_back(prefix + l);
  return c;
}

std::vector<std::string> header(std::vector<std::string> head, const std::vector<std::string>& tail) {
  head.insert(head.end(), tail.begin(), tail.end());
  return head;
}

// Times for checks and dumps: [section] key, else the default list clipped to
// the horizon.
std::vector<double> times_from(const Setup& s, const std::string& section, const std::string& key,
                               std::vector<double> fallback) {
  std::vector<double> t = s.cfg.has(section, key) ? s.cfg.get_list(section, key) : fallback;
  if (!s.cfg.has(section, key)) std::erase_if(t, [&](double x) { return x > s.lln.horizon + 1e-12; });
  if (t.empty()) throw ConfigError("[" + section + "] " + key + " selects no times");
  return t;
}

std::vector<int> ints_from(const Setup& s, const std::string& section, const std::string& key,
                           std::vector<int> fallback) {
  if (!s.cfg.has(section, key)) return fallback;
  std::vector<int> out;
  for (double v : s.cfg.get_list(section, key)) out.push_back(static_cast<int>(std::lround(v)));
  return out;
}

void say(const Setup& s, const std::string& line) {
  if (!s.quiet) std::cout << line << "\n";
}

std::string pass_word(bool ok) { return ok ? "PASS" : "FAIL"; }

// ---------------------------------------------------------------------------

int cmd_simulate(Setup& s, RunDirectory& run) {
  const double T = s.lln.horizon;
  SimOptions opt;
  const int steps = static_cast<int>(std::ceil(T / s.lln.dt - 1e-9));
  for (int k = 0; k <= steps; ++k) opt.snapshot_times.push_back(T * k / steps);
  if (s.cfg.has("run", "hist_edges")) {
    opt.hist_edges = s.cfg.get_list("run", "hist_edges");
  } else {
    for (int a = 0; a <= 12; ++a) opt.hist_edges.push_back(a);
  }
  opt.incremental = s.cfg.get_bool("run", "incremental", false) && s.model.lambda_piecewise_constant();

  std::vector<SimOutput> out(s.reps);
  parallel_for(s.reps, s.jobs, [&](int r) {
    out[r] = simulate(s.model, s.N, T, opt, replica_seed(s.seed, s.N, r));
  });

  CsvTable ev({"replicate", "time", "k", "trait_before", "trait_after", "age_at_event"});
  std::vector<std::string> bins;
  for (std::size_t b = 0; b < opt.hist_edges.size(); ++b) bins.push_back("age_bin_" + format_double(opt.hist_edges[b]));
  CsvTable snap(header(header({"replicate", "t", "F_emp"}, trait_columns(s.model, "S_emp_")), bins));
  CsvTable meta({"replicate", "seed", "N", "events", "candidates", "accepted"});
  const auto& labels = s.model.traits.labels;
  for (int r = 0; r < s.reps; ++r) {
    const auto& o = out[r];
    for (const auto& e : o.events)
      ev.row({CsvTable::cell(r), CsvTable::cell(e.time), CsvTable::cell(e.k),
              CsvTable::cell(labels[e.trait_before]), CsvTable::cell(labels[e.trait_after]),
              CsvTable::cell(e.age_at_event)});
    for (int i = 0; i < o.snapshot_times.size(); ++i) {
      std::vector<std::string> row{CsvTable::cell(r), CsvTable::cell(o.snapshot_times[i]),
                                   CsvTable::cell(o.F_emp[i])};
      for (int j = 0; j < o.S_emp.cols(); ++j) row.push_back(CsvTable::cell(o.S_emp(i, j)));
      for (int b = 0; b < o.age_hist.cols(); ++b) row.push_back(CsvTable::cell(o.age_hist(i, b)));
      snap.row(row);
    }
    meta.row({CsvTable::cell(r), hex64(o.seed), CsvTable::cell(o.N),
              CsvTable::cell(static_cast<long>(o.events.size())), CsvTable::cell(o.candidates),
              CsvTable::cell(o.accepted)});
  }
  run.write("events.csv", ev.str());
  run.write("snapshots.csv", snap.str());
  run.write("runs.csv", meta.str());
  run.note("model_digest", hex64(s.model.digest));
  say(s, "simulate: " + std::to_string(s.reps) + " run(s), N = " + std::to_string(s.N) + ", " +
             std::to_string(ev.rows()) + " events");
  return 0;
}

int cmd_solve_lln(Setup& s, RunDirectory& run) {
  const auto sol = solve_lln(s.model, s.lln);
  const auto res = lln_residual(sol, s.model);
  CsvTable t(header({"t", "F"}, trait_columns(s.model, "S_")));
  for (int k = 0; k < sol.t.size(); ++k) {
    std::vector<std::string> row{CsvTable::cell(sol.t[k]), CsvTable::cell(sol.F[k])};
    for (int j = 0; j < sol.S.cols(); ++j) row.push_back(CsvTable::cell(sol.S(k, j)));
    t.row(row);
  }
  run.write("lln.csv", t.str());

  if (s.cfg.get_bool("output", "density", false)) {
    const auto times = times_from(s, "output", "density_times", {0, 2, 4, 6, 8});
    const double amax = s.cfg.get_double("output", "density_age_max", 10.0);
    const double da = s.cfg.get_double("output", "density_age_step", 0.05);
    CsvTable d({"t", "a", "trait", "u"});
    for (double tt : times)
      for (int i = 0; i * da <= amax + 1e-12; ++i)
        for (int j = 0; j < s.model.num_traits(); ++j)
          d.row({CsvTable::cell(tt), CsvTable::cell(i * da), CsvTable::cell(s.model.traits.labels[j]),
                 CsvTable::cell(density(sol, s.model, tt, i * da, j))});
    run.write("density.csv", d.str());
  }
  run.note("residual", format_double(res.max()));
  run.note("model_digest", hex64(s.model.digest));
  say(s, "solve-lln: " + std::to_string(sol.grid.steps) + " steps, residual " +
             format_double(res.max()));
  return 0;
}

int cmd_sample_gaussian(Setup& s, RunDirectory& run) {
  const auto sol = solve_lln(s.model, s.lln);
  auto fs = fluctuation_functionals(s.model);
  fs.push_back(TestFunctional::constant(s.model.num_traits(), 1.0));
  const auto times = times_from(s, "gaussian", "times", {2, 5, 8});
  GaussianOptions go;
  go.method = s.cfg.get_string("gaussian", "method", "cells");
  go.jobs = s.jobs;
  const auto b = sample_gaussian(s.model, sol, fs, times, s.reps, s.seed, go);

  CsvTable out({"replicate", "block", "functional", "t", "value"});
  for (int r = 0; r < b.replicates; ++r)
    for (int blk = 0; blk < 4; ++blk)
      for (std::size_t f = 0; f < fs.size(); ++f)
        for (int i = 0; i < b.num_times(); ++i)
          out.row({CsvTable::cell(r), kBlockNames[blk], b.labels[f], CsvTable::cell(b.times[i]),
                   CsvTable::cell(b.value(static_cast<NoiseBlock>(blk), r, static_cast<int>(f), i))});
  run.write("gaussian_batch.csv", out.str());

  if (s.cfg.get_bool("output", "covariance", true)) {
    CovarianceKernels ker(s.model, sol);
    CsvTable cov({"block_pair", "f", "g", "t", "t2", "value"});
    for (const char* pair : {"01-01", "02-02", "1-1", "2-2", "1-2", "1-02"})
      for (const auto& f : fs)
        for (const auto& g : fs)
          for (double t1 : b.times)
            for (double t2 : b.times)
              cov.row({pair, f.label, g.label, CsvTable::cell(t1), CsvTable::cell(t2),
                       CsvTable::cell(ker.cov_M(pair, f, g, t1, t2))});
    run.write("covariance.csv", cov.str());
  }
  run.note("method", b.method);
  run.note("jitter", format_double(b.jitter));
  say(s, "sample-gaussian: " + std::to_string(b.replicates) + " replicates (" + b.method + ")");
  return 0;
}

int cmd_solve_fclt(Setup& s, RunDirectory& run) {
  const auto sol = solve_lln(s.model, s.lln);
  const auto fs = fluctuation_functionals(s.model);
  GaussianOptions go;
  go.method = s.cfg.get_string("gaussian", "method", "cells");
  go.jobs = s.jobs;
  const auto b = sample_gaussian(s.model, sol, fs, {}, s.reps, s.seed, go);

  CsvTable fl(header({"replicate", "t", "hF"}, trait_columns(s.model, "hS_")));
  double worst = 0.0;
  for (int r = 0; r < s.reps; ++r) {
    const auto u = solve_fluctuation(s.model, sol, b, r);
    for (int k = 0; k < u.t.size(); ++k) {
      std::vector<std::string> row{CsvTable::cell(r), CsvTable::cell(u.t[k]), CsvTable::cell(u.hF[k])};
      for (int j = 0; j < u.hS.cols(); ++j) row.push_back(CsvTable::cell(u.hS(k, j)));
      fl.row(row);
    }
    worst = std::max(worst, u.budget);
  }
  run.write("fluct.csv", fl.str());

  const auto times = times_from(s, "fclt", "times", {2, 5, 8});
  const int mc = static_cast<int>(s.cfg.get_int("fclt", "moment_reps", 2000));
  const auto ex = fluctuation_moments_exact(s.model, sol, times);
  const auto mo = fluctuation_moments(s.model, sol, times, mc, s.seed, s.jobs);
  CsvTable m({"t", "t2", "cov_hF", "stderr", "cov_hF_exact"});
  for (std::size_t i = 0; i < times.size(); ++i)
    for (std::size_t k = 0; k < times.size(); ++k)
      m.row({CsvTable::cell(times[i]), CsvTable::cell(times[k]), CsvTable::cell(mo.cov_hF(i, k)),
             CsvTable::cell(mo.se_hF(i, k)), CsvTable::cell(ex.cov_hF(i, k))});
  run.write("moments.csv", m.str());
  run.note("budget", format_double(worst));
  say(s, "solve-fclt: " + std::to_string(s.reps) + " paths, moments from " + std::to_string(mc) +
             " replicates");
  return 0;
}

int cmd_verify_lln(Setup& s, RunDirectory& run) {
  const auto sol = solve_lln(s.model, s.lln);
  const auto Ns = ints_from(s, "verify", "N_list", {250, 500, 1000, 2000, 4000});
  VerifyOptions vo{s.jobs, s.cfg.get_bool("run", "incremental", false)};
  const auto r = lln_convergence(s.model, sol, Ns, s.reps, s.lln.horizon, s.seed, vo);
  CsvTable t({"N", "mean_sup_err", "stderr"});
  for (std::size_t i = 0; i < r.N.size(); ++i)
    t.row({CsvTable::cell(r.N[i]), CsvTable::cell(r.mean_err[i]), CsvTable::cell(r.se_err[i])});
  run.write("report.csv", t.str());
  std::ostringstream sum;
  if (r.degenerate) {
    sum << "lln rate: " << r.reason << "\n";
  } else {
    sum << "lln rate: slope " << format_double(r.slope) << " +- " << format_double(r.slope_se)
        << " (accept [" << r.slope_lo << ", " << r.slope_hi << "]) " << pass_word(r.pass) << "\n";
  }
  run.write("summary.txt", sum.str());
  say(s, sum.str().substr(0, sum.str().size() - 1));
  return r.pass || r.degenerate ? 0 : 1;
}

int cmd_verify_clt(Setup& s, RunDirectory& run) {
  const auto sol = solve_lln(s.model, s.lln);
  const auto times = times_from(s, "verify", "times", {2, 5, 8});
  const int mc = static_cast<int>(s.cfg.get_int("verify", "limit_reps", 2000));
  const auto mo = mc > 0 ? fluctuation_moments(s.model, sol, times, mc, s.seed, s.jobs)
                         : fluctuation_moments_exact(s.model, sol, times);
  VerifyOptions vo{s.jobs, s.cfg.get_bool("run", "incremental", false)};
  const auto r = clt_check(s.model, sol, mo, s.N, s.reps, s.seed, vo);
  CsvTable t({"t", "var_emp", "var_pred", "ratio", "ks_D", "ks_p", "pass"});
  bool ok = !r.degenerate;
  for (std::size_t i = 0; i < r.times.size(); ++i) {
    t.row({CsvTable::cell(r.times[i]), CsvTable::cell(r.var_emp[i]), CsvTable::cell(r.var_pred[i]),
           CsvTable::cell(r.ratio[i]), CsvTable::cell(r.ks_D[i]), CsvTable::cell(r.ks_p[i]),
           pass_word(r.pass[i])});
    ok = ok && r.pass[i];
  }
  run.write("report.csv", t.str());
  std::ostringstream sum;
  if (r.degenerate) {
    sum << "clt: " << r.reason << "\n";
  } else {
    sum << "clt: N = " << r.N << ", " << r.reps << " runs, marginals " << pass_word(ok)
        << ", consecutive correlations " << pass_word(r.corr_pass) << "\n";
  }
  run.write("summary.txt", sum.str());
  say(s, sum.str().substr(0, sum.str().size() - 1));
  return ok || r.degenerate ? 0 : 1;
}

int cmd_verify_qv(Setup& s, RunDirectory& run) {
  const double T = s.lln.horizon;
  const auto phi = TestFunctional::lambda(s.model);
  const int sub = static_cast<int>(s.cfg.get_int("verify", "substeps", 4000));
  SimOptions opt;
  opt.incremental = s.cfg.get_bool("run", "incremental", false) && s.model.lambda_piecewise_constant();
  std::vector<QvReport> q(s.reps);
  parallel_for(s.reps, s.jobs, [&](int r) {
    const auto sim = simulate(s.model, s.N, T, opt, replica_seed(s.seed, s.N, r));
    q[r] = qv_check(sim, s.model, phi, sub);
  });
  CsvTable t({"replicate", "events", "realized", "compensator", "ratio", "z", "W"});
  Eigen::VectorXd ratios(s.reps);
  for (int r = 0; r < s.reps; ++r) {
    t.row({CsvTable::cell(r), CsvTable::cell(q[r].events), CsvTable::cell(q[r].realized),
           CsvTable::cell(q[r].compensator), CsvTable::cell(q[r].ratio), CsvTable::cell(q[r].z),
           CsvTable::cell(q[r].W)});
    ratios[r] = q[r].ratio;
  }
  run.write("report.csv", t.str());
  const bool trivial = ratios.hasNaN();
  const double mean = trivial ? 0.0 : ratios.mean();
  const bool ok = trivial || (mean >= 0.95 && mean <= 1.05);
  std::ostringstream sum;
  if (trivial)
    sum << "quadratic variation: no jumps of phi, identity holds trivially\n";
  else
    sum << "quadratic variation: mean ratio " << format_double(mean) << " over " << s.reps
        << " runs (accept [0.95, 1.05]) " << pass_word(ok) << "\n";
  run.write("summary.txt", sum.str());
  say(s, sum.str().substr(0, sum.str().size() - 1));
  return ok ? 0 : 1;
}

int cmd_verify_coupling(Setup& s, RunDirectory& run) {
  const auto sol = solve_lln(s.model, s.lln);
  VerifyOptions vo{s.jobs, s.cfg.get_bool("run", "incremental", false)};
  const auto r = coupling_check(s.model, sol, s.N, s.reps, s.lln.horizon, s.seed, vo);
  CsvTable t({"replicate", "mean_sup_dA", "mean_sup_da", "bound_A", "bound_a"});
  for (int i = 0; i < r.mean_dA.size(); ++i)
    t.row({CsvTable::cell(i), CsvTable::cell(r.mean_dA[i]), CsvTable::cell(r.mean_da[i]),
           CsvTable::cell(r.bound_A), CsvTable::cell(r.bound_a)});
  run.write("report.csv", t.str());
  std::ostringstream sum;
  sum << "coupling: N = " << r.N << ", E sup|A^N - A| = " << format_double(r.mean_A())
      << ", bound " << format_double(r.bound_A) << " " << pass_word(r.all_below) << "\n";
  run.write("summary.txt", sum.str());
  say(s, sum.str().substr(0, sum.str().size() - 1));
  return r.all_below ? 0 : 1;
}

// Builds the model and the solver grid without running anything.
int cmd_validate(const Flags& f) {
  Setup s = prepare(f);
  double a0 = 0.0;
  const double h = s.lln.dt;
  if (!(h > 0) || !(s.lln.horizon > 0)) throw GridError("horizon and dt must be positive");
  a0 = s.model.initial_age.tail_point(s.lln.tail_mass);
  if (a0 / h > 2e6) throw GridError("initial age truncation needs too many cells");
  std::cout << "OK\n";
  std::cout << "kappa_bar = " << format_double(s.model.kappa_bar) << "\n";
  std::cout << "lambda_star = " << format_double(s.model.lambda_star) << "\n";
  std::cout << "traits = " << s.model.num_traits() << "\n";
  std::cout << "digest = " << hex64(s.cfg.digest()) << "\n\n";
  std::cout << s.cfg.normalized();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"epiflux: age-structured reinfection models, their limits and fluctuations"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);
  app.fallthrough();
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  Flags f;
  app.add_option("--config", f.config, "model/run configuration (INI)")->check(CLI::ExistingFile);
  app.add_option("--out", f.out, "output directory");
  app.add_option("--seed", f.seed, "master seed");
  app.add_option("--jobs", f.jobs, "worker threads (default: EPIFLUX_JOBS or 1)");
  app.add_option("--dt", f.dt, "solver step");
  app.add_option("--horizon", f.horizon, "time horizon T");
  app.add_option("--n", f.n, "population size N");
  app.add_option("--reps", f.reps, "replicates");
  app.add_flag("--quiet", f.quiet, "no summary on stdout");

  using Cmd = int (*)(Setup&, RunDirectory&);
  const std::vector<std::pair<std::string, Cmd>> cmds{
      {"simulate", cmd_simulate},         {"solve-lln", cmd_solve_lln},
      {"sample-gaussian", cmd_sample_gaussian}, {"solve-fclt", cmd_solve_fclt},
      {"verify-lln", cmd_verify_lln},     {"verify-clt", cmd_verify_clt},
      {"verify-qv", cmd_verify_qv},       {"verify-coupling", cmd_verify_coupling}};
  std::vector<CLI::App*> subs;
  for (const auto& [name, fn] : cmds) subs.push_back(app.add_subcommand(name));
  auto* validate = app.add_subcommand("validate", "check a configuration and print it normalized");

  CLI11_PARSE(app, argc, argv);
  if (f.config.empty()) {
    std::cerr << "--config is required\n";
    return 2;
  }

  if (validate->parsed()) {
    try {
      return cmd_validate(f);
    } catch (const Error& e) {
      std::cerr << e.kind() << ": " << e.what() << "\n";
      return 1;
    }
  }

  for (std::size_t i = 0; i < cmds.size(); ++i) {
    if (!subs[i]->parsed()) continue;
    const std::string& name = cmds[i].first;
    std::optional<RunDirectory> run;
    try {
      Setup s = prepare(f);
      run.emplace(f.out, name, s.cfg.digest(), s.seed);
      run->note("config", s.cfg.normalized());
      const int rc = cmds[i].second(s, *run);
      run->commit();
      return rc;
    } catch (const Error& e) {
      if (!run) run.emplace(f.out, name, 0, f.seed.value_or(0));
      run->fail(e.kind(), e.what());
      std::cerr << e.kind() << ": " << e.what() << "\n";
    } catch (const std::exception& e) {
      if (!run) run.emplace(f.out, name, 0, f.seed.value_or(0));
      run->fail("InternalError", e.what());
      std::cerr << "error: " << e.what() << "\n";
    }
    return 1;
  }
  return 2;
}
