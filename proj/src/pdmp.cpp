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

#include "epiflux/pdmp.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <span>

#include "epiflux/errors.hpp"

namespace epiflux {

namespace {

// Neumaier summation; the incremental force of infection is a long running sum.
struct CompensatedSum {
  double s = 0.0, c = 0.0;
  void add(double x) {
    const double t = s + x;
    if (std::abs(s) >= std::abs(x))
      c += (s - t) + x;
    else
      c += (x - t) + s;
    s = t;
  }
  double value() const { return s + c; }
};

struct Candidate {
  double t;
  int k;
  bool operator>(const Candidate& o) const { return t > o.t || (t == o.t && k > o.k); }
};

struct Crossing {
  double t;
  int k;
  unsigned gen;
  int bp;  // index into the trait's breakpoint list
  bool operator>(const Crossing& o) const { return t > o.t || (t == o.t && k > o.k); }
};

template <class T>
using MinHeap = std::priority_queue<T, std::vector<T>, std::greater<T>>;

std::vector<std::vector<double>> lambda_breakpoints(const ModelSpec& model) {
  std::vector<std::vector<double>> out;
  for (const auto& f : model.lambda) {
    auto b = f.breakpoints();
    std::sort(b.begin(), b.end());
    b.erase(std::unique(b.begin(), b.end()), b.end());
    out.push_back(std::move(b));
  }
  return out;
}

class Engine {
 public:
  Engine(const ModelSpec& model, int N, double T, std::uint64_t seed, bool incremental,
         const LlnSolution* lln)
      : model_(model), N_(N), T_(T), incremental_(incremental), lln_(lln) {
    if (N < 1) throw ConfigError("population size must be >= 1");
    if (!(T > 0)) throw ConfigError("horizon must be positive");
    if (incremental && !model.lambda_piecewise_constant())
      throw ConfigError("incremental force of infection needs piecewise-constant lambda");
    if (lln && lln->horizon() < T * (1 - 1e-12))
      throw GridError("LLN table does not cover the horizon");
    Rng init(sub_seed(seed, StreamTag::initial_condition));
    initial_ = sample_initial(model, N, init);
    rngs_.reserve(N);
    for (int k = 0; k < N; ++k) rngs_.emplace_back(sub_seed(seed, static_cast<std::uint64_t>(k)));
    tau_.resize(N);
    theta_.resize(N);
    count_.assign(N, 0);
    for (int k = 0; k < N; ++k) {
      tau_[k] = -initial_[k].age;
      theta_[k] = initial_[k].trait;
    }
    if (lln) {
      tauL_ = tau_;
      thetaL_ = theta_;
      countL_.assign(N, 0);
      sup_dA_.assign(N, 0);
      sup_da_.assign(N, 0.0);
    }
    rate_ = model.lambda_star * model.kappa_bar;
    env_cdf_ = std::span<const double>(model.envelope_cdf.data(),
                                       static_cast<std::size_t>(model.envelope_cdf.size()));
    if (incremental) {
      bps_ = lambda_breakpoints(model);
      cur_lambda_.resize(N);
      gen_.assign(N, 0);
      for (int k = 0; k < N; ++k) {
        cur_lambda_[k] = model.lambda[theta_[k]](initial_[k].age);
        fsum_.add(cur_lambda_[k]);
        schedule_crossing(k, initial_[k].age);
      }
    }
    for (int k = 0; k < N; ++k) {
      const double t = rngs_[k].exponential(rate_);
      if (t <= T) cands_.push({t, k});
    }
  }

  template <class OnEvent, class OnSnapshot>
  void run(const std::vector<double>& snaps, OnEvent on_event, OnSnapshot on_snapshot) {
    std::size_t si = 0;
    for (;;) {
      const double tc = cands_.empty() ? INFINITY : cands_.top().t;
      const double tb = crossings_.empty() ? INFINITY : crossings_.top().t;
      const double next = std::min(tc, tb);
      while (si < snaps.size() && snaps[si] < next) on_snapshot(si, snaps[si]), ++si;
      if (next > T_) break;
      if (tb <= tc) {
        cross();
      } else {
        const Candidate c = cands_.top();
        cands_.pop();
        candidate(c.t, c.k, on_event);
        const double tn = c.t + rngs_[c.k].exponential(rate_);
        if (tn <= T_) cands_.push({tn, c.k});
      }
    }
    while (si < snaps.size()) on_snapshot(si, snaps[si]), ++si;
  }

  double force(double t) const {
    if (incremental_) return fsum_.value() / N_;
    double s = 0.0;
    for (int k = 0; k < N_; ++k) s += model_.lambda[theta_[k]](t - tau_[k]);
    return s / N_;
  }

  PopulationState state(double t) const {
    PopulationState st;
    st.t = t;
    st.age.resize(N_);
    for (int k = 0; k < N_; ++k) st.age[k] = t - tau_[k];
    st.trait = theta_;
    st.reinfections = count_;
    return st;
  }

  const std::vector<Individual>& initial() const { return initial_; }
  long candidates = 0, accepted = 0;
  double p_sum = 0.0, p_var = 0.0;

  std::vector<long> sup_dA_;
  std::vector<double> sup_da_;
  std::vector<long> count_, countL_;

 private:
  void schedule_crossing(int k, double age) {
    const auto& b = bps_[theta_[k]];
    auto it = std::upper_bound(b.begin(), b.end(), age);
    if (it == b.end()) return;
    const double t = tau_[k] + *it;
    if (t <= T_) crossings_.push({t, k, gen_[k], static_cast<int>(it - b.begin())});
  }

  void cross() {
    const Crossing c = crossings_.top();
    crossings_.pop();
    if (c.gen != gen_[c.k]) return;
    const auto& b = bps_[theta_[c.k]];
    // value at the breakpoint itself: families are right-closed
    const double v = model_.lambda[theta_[c.k]](b[c.bp]);
    fsum_.add(v - cur_lambda_[c.k]);
    cur_lambda_[c.k] = v;
    if (c.bp + 1 < static_cast<int>(b.size())) {
      const double t = tau_[c.k] + b[c.bp + 1];
      if (t <= T_) crossings_.push({t, c.k, gen_[c.k], c.bp + 1});
    }
  }

  template <class OnEvent>
  void candidate(double t, int k, OnEvent& on_event) {
    Rng& rng = rngs_[k];
    const int mark = rng.discrete(env_cdf_);
    const double u = rng.uniform_pos();
    const double env = model_.lambda_star * model_.kernel_sup[mark];
    ++candidates;

    const double F = force(t);
    const int th = theta_[k];
    const double age = t - tau_[k];
    const double lhs = F * model_.gamma[th](age) * model_.kernel(th, mark);
    const double p = lhs / env;
    p_sum += p;
    p_var += p * (1.0 - p);
    if (lhs >= u * env) {
      ++accepted;
      on_event(EventRecord{t, k, th, mark, age});
      tau_[k] = t;
      theta_[k] = mark;
      ++count_[k];
      if (incremental_) {
        const double v = model_.lambda[mark](0.0);
        fsum_.add(v - cur_lambda_[k]);
        cur_lambda_[k] = v;
        ++gen_[k];
        schedule_crossing(k, 0.0);
      }
    }
    if (lln_) {
      const double FL = interp_F(*lln_, t);
      const int thL = thetaL_[k];
      const double lhsL = FL * model_.gamma[thL](t - tauL_[k]) * model_.kernel(thL, mark);
      if (lhsL >= u * env) {
        tauL_[k] = t;
        thetaL_[k] = mark;
        ++countL_[k];
      }
      sup_dA_[k] = std::max(sup_dA_[k], std::abs(count_[k] - countL_[k]));
      sup_da_[k] = std::max(sup_da_[k], std::abs(tauL_[k] - tau_[k]));
    }
  }

  const ModelSpec& model_;
  int N_;
  double T_;
  bool incremental_;
  const LlnSolution* lln_;
  double rate_ = 0.0;
  std::span<const double> env_cdf_;

  std::vector<Individual> initial_;
  std::vector<Rng> rngs_;
  std::vector<double> tau_;  // time of last infection (-a_0 initially)
  std::vector<int> theta_;
  MinHeap<Candidate> cands_;

  std::vector<double> tauL_;
  std::vector<int> thetaL_;

  std::vector<std::vector<double>> bps_;
  std::vector<double> cur_lambda_;
  std::vector<unsigned> gen_;
  CompensatedSum fsum_;
  MinHeap<Crossing> crossings_;
};

}  // namespace

double force_of_infection(const ModelSpec& model, const PopulationState& state) {
  double s = 0.0;
  for (int k = 0; k < state.size(); ++k) s += model.lambda[state.trait[k]](state.age[k]);
  return s / state.size();
}

Eigen::VectorXd mean_susceptibility(const ModelSpec& model, const PopulationState& state) {
  Eigen::VectorXd T = Eigen::VectorXd::Zero(model.num_traits());
  for (int k = 0; k < state.size(); ++k)
    T[state.trait[k]] += model.gamma[state.trait[k]](state.age[k]);
  return model.kernel.transpose() * T / state.size();
}

SimOutput simulate(const ModelSpec& model, int N, double T, const SimOptions& opt,
                   std::uint64_t seed) {
  for (double s : opt.snapshot_times)
    if (s < 0 || s > T) throw ConfigError("snapshot time " + format_double(s) + " outside [0, T]");
  if (!std::is_sorted(opt.snapshot_times.begin(), opt.snapshot_times.end()))
    throw ConfigError("snapshot times must be sorted");

  Engine eng(model, N, T, seed, opt.incremental, nullptr);
  SimOutput out;
  out.seed = seed;
  out.N = N;
  out.horizon = T;
  out.model_digest = model.digest;
  out.initial = eng.initial();
  out.hist_edges = opt.hist_edges;
  const auto ns = static_cast<Eigen::Index>(opt.snapshot_times.size());
  const int J = model.num_traits();
  const int bins = opt.hist_edges.empty() ? 0 : static_cast<int>(opt.hist_edges.size());
  out.snapshot_times = Eigen::Map<const Eigen::VectorXd>(opt.snapshot_times.data(), ns);
  out.F_emp.resize(ns);
  out.S_emp.resize(ns, J);
  out.age_hist = Eigen::MatrixXd::Zero(ns, bins);

  eng.run(
      opt.snapshot_times,
      [&](const EventRecord& e) {
        if (opt.keep_events) out.events.push_back(e);
      },
      [&](std::size_t i, double s) {
        const PopulationState st = eng.state(s);
        out.F_emp[i] = force_of_infection(model, st);
        out.S_emp.row(i) = mean_susceptibility(model, st).transpose();
        if (bins > 0) {
          for (double a : st.age) {
            auto it = std::upper_bound(opt.hist_edges.begin(), opt.hist_edges.end(), a);
            if (it == opt.hist_edges.begin()) continue;
            out.age_hist(i, static_cast<Eigen::Index>(it - opt.hist_edges.begin()) - 1) += 1.0;
          }
          out.age_hist.row(i) /= N;
        }
      });
  out.final_state = eng.state(T);
  out.candidates = eng.candidates;
  out.accepted = eng.accepted;
  out.accept_prob_sum = eng.p_sum;
  out.accept_prob_var = eng.p_var;
  return out;
}

LimitPath limit_individual(const ModelSpec& model, const LlnSolution& lln, double T, Rng& rng,
                           std::optional<Individual> start) {
  if (lln.horizon() < T * (1 - 1e-12)) throw GridError("F table does not cover [0, T]");
  LimitPath path;
  if (start) {
    path.start = *start;
  } else {
    path.start.age = model.initial_age.sample(rng);
    path.start.trait = rng.discrete({model.trait_cdf.data(), static_cast<std::size_t>(model.num_traits())});
  }
  const double rate = model.lambda_star * model.kappa_bar;
  const std::span<const double> env(model.envelope_cdf.data(),
                                    static_cast<std::size_t>(model.num_traits()));
  double tau = -path.start.age;
  int th = path.start.trait;
  for (double t = rng.exponential(rate); t <= T; t += rng.exponential(rate)) {
    const int mark = rng.discrete(env);
    const double u = rng.uniform_pos();
    const double lhs = interp_F(lln, t) * model.gamma[th](t - tau) * model.kernel(th, mark);
    if (lhs >= u * model.lambda_star * model.kernel_sup[mark]) {
      path.jumps.push_back({t, 0, th, mark, t - tau});
      tau = t;
      th = mark;
      ++path.count;
    }
  }
  path.final_age = T - tau;
  path.final_trait = th;
  return path;
}

double CoupledOutput::mean_dA() const {
  double s = 0;
  for (long v : sup_dA) s += static_cast<double>(v);
  return s / static_cast<double>(sup_dA.size());
}

double CoupledOutput::mean_da() const {
  double s = 0;
  for (double v : sup_da) s += v;
  return s / static_cast<double>(sup_da.size());
}

CoupledOutput simulate_coupled(const ModelSpec& model, const LlnSolution& lln, int N, double T,
                               std::uint64_t seed, bool incremental) {
  Engine eng(model, N, T, seed, incremental, &lln);
  eng.run({}, [](const EventRecord&) {}, [](std::size_t, double) {});
  CoupledOutput out;
  out.seed = seed;
  out.N = N;
  out.horizon = T;
  out.sup_dA = eng.sup_dA_;
  out.sup_da = eng.sup_da_;
  out.count_N = eng.count_;
  out.count_lim = eng.countL_;
  return out;
}

}  // namespace epiflux
