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

#include "epiflux/model.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include <boost/math/special_functions/gamma.hpp>

#include "epiflux/errors.hpp"

namespace epiflux {

// ---------------------------------------------------------------- AgeFunction

AgeFunction AgeFunction::constant(double value) {
  AgeFunction f;
  f.family_ = Family::constant;
  f.params_ = {value};
  return f;
}

AgeFunction AgeFunction::window(double value, double cutoff) {
  AgeFunction f;
  f.family_ = Family::window;
  f.params_ = {value, cutoff};
  return f;
}

AgeFunction AgeFunction::delay(double value, double threshold) {
  AgeFunction f;
  f.family_ = Family::delay;
  f.params_ = {value, threshold};
  return f;
}

AgeFunction AgeFunction::exp_decay(double value, double rate) {
  AgeFunction f;
  f.family_ = Family::exp_decay;
  f.params_ = {value, rate};
  return f;
}

AgeFunction AgeFunction::sigmoid(double value, double midpoint, double slope) {
  AgeFunction f;
  f.family_ = Family::sigmoid;
  f.params_ = {value, midpoint, slope};
  return f;
}

AgeFunction AgeFunction::tabulated(std::vector<double> ages, std::vector<double> values,
                                   bool zero_tail) {
  if (ages.empty() || ages.size() != values.size())
    throw ConfigError("tabulated family needs equally many ages and values");
  for (std::size_t i = 1; i < ages.size(); ++i)
    if (!(ages[i] > ages[i - 1])) throw ConfigError("tabulated ages must increase strictly");
  if (ages[0] < 0.0) throw ConfigError("tabulated ages must be >= 0");
  AgeFunction f;
  f.family_ = Family::tabulated;
  f.params_.clear();
  f.ages_ = std::move(ages);
  f.values_ = std::move(values);
  f.zero_tail_ = zero_tail;
  return f;
}

double AgeFunction::operator()(double a) const {
  switch (family_) {
    case Family::constant:
      return params_[0];
    case Family::window:
      return a < params_[1] ? params_[0] : 0.0;
    case Family::delay:
      return a >= params_[1] ? params_[0] : 0.0;
    case Family::exp_decay:
      return params_[0] * std::exp(-params_[1] * a);
    case Family::sigmoid:
      return params_[0] / (1.0 + std::exp(-params_[2] * (a - params_[1])));
    case Family::tabulated: {
      if (a <= ages_.front()) return values_.front();
      if (a >= ages_.back()) return zero_tail_ && a > ages_.back() ? 0.0 : values_.back();
      auto it = std::upper_bound(ages_.begin(), ages_.end(), a);
      const auto i = static_cast<std::size_t>(it - ages_.begin());
      const double x = (a - ages_[i - 1]) / (ages_[i] - ages_[i - 1]);
      return values_[i - 1] + x * (values_[i] - values_[i - 1]);
    }
  }
  return 0.0;
}

std::string AgeFunction::family_name() const {
  switch (family_) {
    case Family::constant: return "constant";
    case Family::window: return "window";
    case Family::delay: return "delay";
    case Family::exp_decay: return "exp_decay";
    case Family::sigmoid: return "sigmoid";
    case Family::tabulated: return "tabulated";
  }
  return "?";
}

std::vector<double> AgeFunction::breakpoints() const {
  switch (family_) {
    case Family::window:
    case Family::delay:
      return {params_[1]};
    case Family::tabulated:
      return ages_;
    default:
      return {};
  }
}

bool AgeFunction::piecewise_constant() const {
  return family_ == Family::constant || family_ == Family::window || family_ == Family::delay;
}

// ------------------------------------------------------------- InitialAgeLaw

InitialAgeLaw InitialAgeLaw::exponential(double rate) {
  if (!(rate > 0)) throw ConfigError("exponential rate must be > 0");
  InitialAgeLaw l;
  l.law_ = AgeLaw::exponential;
  l.params_ = {rate};
  return l;
}

InitialAgeLaw InitialAgeLaw::uniform(double low, double high) {
  if (!(low >= 0 && high > low)) throw ConfigError("uniform ages need 0 <= low < high");
  InitialAgeLaw l;
  l.law_ = AgeLaw::uniform;
  l.params_ = {low, high};
  return l;
}

InitialAgeLaw InitialAgeLaw::gamma(double shape, double scale) {
  if (!(shape > 0 && scale > 0)) throw ConfigError("gamma ages need shape, scale > 0");
  InitialAgeLaw l;
  l.law_ = AgeLaw::gamma;
  l.params_ = {shape, scale};
  return l;
}

InitialAgeLaw InitialAgeLaw::pareto(double scale, double shape) {
  if (!(shape > 0 && scale > 0)) throw ConfigError("pareto ages need scale, shape > 0");
  InitialAgeLaw l;
  l.law_ = AgeLaw::pareto;
  l.params_ = {scale, shape};
  return l;
}

InitialAgeLaw InitialAgeLaw::point(double value) {
  if (!(value >= 0)) throw ConfigError("point age must be >= 0");
  InitialAgeLaw l;
  l.law_ = AgeLaw::point;
  l.params_ = {value};
  return l;
}

InitialAgeLaw InitialAgeLaw::empirical(std::vector<double> samples) {
  if (samples.empty()) throw ConfigError("empirical age sample is empty");
  for (double s : samples)
    if (!(s >= 0) || !std::isfinite(s)) throw ConfigError("empirical ages must be finite, >= 0");
  std::sort(samples.begin(), samples.end());
  InitialAgeLaw l;
  l.law_ = AgeLaw::empirical;
  l.params_.clear();
  l.samples_ = std::move(samples);
  return l;
}

std::string InitialAgeLaw::name() const {
  switch (law_) {
    case AgeLaw::exponential: return "exponential";
    case AgeLaw::uniform: return "uniform";
    case AgeLaw::gamma: return "gamma";
    case AgeLaw::pareto: return "pareto";
    case AgeLaw::point: return "point";
    case AgeLaw::empirical: return "empirical";
  }
  return "?";
}

namespace {

// Marsaglia & Tsang (2000)
double sample_gamma(Rng& rng, double shape) {
  if (shape < 1.0) {
    const double g = sample_gamma(rng, shape + 1.0);
    return g * std::pow(rng.uniform_pos(), 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    const double x = rng.normal();
    double v = 1.0 + c * x;
    if (v <= 0) continue;
    v = v * v * v;
    const double u = rng.uniform_pos();
    if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) return d * v;
  }
}

}  // namespace

double InitialAgeLaw::sample(Rng& rng) const {
  switch (law_) {
    case AgeLaw::exponential: return rng.exponential(params_[0]);
    case AgeLaw::uniform: return params_[0] + (params_[1] - params_[0]) * rng.uniform();
    case AgeLaw::gamma: return params_[1] * sample_gamma(rng, params_[0]);
    case AgeLaw::pareto: return params_[0] * std::pow(rng.uniform_pos(), -1.0 / params_[1]);
    case AgeLaw::point: return params_[0];
    case AgeLaw::empirical: {
      auto i = static_cast<std::size_t>(rng.uniform() * static_cast<double>(samples_.size()));
      return samples_[std::min(i, samples_.size() - 1)];
    }
  }
  return 0.0;
}

double InitialAgeLaw::cdf(double a) const {
  if (a < 0) return 0.0;
  switch (law_) {
    case AgeLaw::exponential: return -std::expm1(-params_[0] * a);
    case AgeLaw::uniform:
      return std::clamp((a - params_[0]) / (params_[1] - params_[0]), 0.0, 1.0);
    case AgeLaw::gamma: return boost::math::gamma_p(params_[0], a / params_[1]);
    case AgeLaw::pareto: return a <= params_[0] ? 0.0 : 1.0 - std::pow(params_[0] / a, params_[1]);
    case AgeLaw::point: return a >= params_[0] ? 1.0 : 0.0;
    case AgeLaw::empirical: {
      auto it = std::upper_bound(samples_.begin(), samples_.end(), a);
      return static_cast<double>(it - samples_.begin()) / static_cast<double>(samples_.size());
    }
  }
  return 0.0;
}

double InitialAgeLaw::pdf(double a) const {
  if (a < 0) return 0.0;
  switch (law_) {
    case AgeLaw::exponential: return params_[0] * std::exp(-params_[0] * a);
    case AgeLaw::uniform:
      return (a >= params_[0] && a <= params_[1]) ? 1.0 / (params_[1] - params_[0]) : 0.0;
    case AgeLaw::gamma:
      return boost::math::gamma_p_derivative(params_[0], a / params_[1]) / params_[1];
    case AgeLaw::pareto:
      return a < params_[0] ? 0.0 : params_[1] * std::pow(params_[0], params_[1]) /
                                        std::pow(a, params_[1] + 1.0);
    case AgeLaw::point:
    case AgeLaw::empirical:
      return 0.0;  // no Lebesgue density
  }
  return 0.0;
}

double InitialAgeLaw::mean() const {
  switch (law_) {
    case AgeLaw::exponential: return 1.0 / params_[0];
    case AgeLaw::uniform: return 0.5 * (params_[0] + params_[1]);
    case AgeLaw::gamma: return params_[0] * params_[1];
    case AgeLaw::pareto:
      return params_[1] > 1 ? params_[1] * params_[0] / (params_[1] - 1.0) : INFINITY;
    case AgeLaw::point: return params_[0];
    case AgeLaw::empirical: {
      double s = 0;
      for (double x : samples_) s += x;
      return s / static_cast<double>(samples_.size());
    }
  }
  return 0.0;
}

double InitialAgeLaw::tail_point(double eps) const {
  switch (law_) {
    case AgeLaw::exponential: return -std::log(eps) / params_[0];
    case AgeLaw::uniform: return params_[1];
    case AgeLaw::gamma: return params_[1] * boost::math::gamma_q_inv(params_[0], eps);
    case AgeLaw::pareto: return params_[0] * std::pow(eps, -1.0 / params_[1]);
    case AgeLaw::point: return params_[0];
    case AgeLaw::empirical: return samples_.back();
  }
  return 0.0;
}

bool InitialAgeLaw::has_moment(double p) const {
  if (law_ == AgeLaw::pareto) return params_[1] > p;
  return true;
}

// ------------------------------------------------------------------- model

int TraitGrid::index_of(const std::string& label) const {
  for (int j = 0; j < size(); ++j)
    if (labels[j] == label) return j;
  return -1;
}

bool ModelSpec::lambda_piecewise_constant() const {
  return std::all_of(lambda.begin(), lambda.end(),
                     [](const AgeFunction& f) { return f.piecewise_constant(); });
}

double eval_lambda(const ModelSpec& model, double a, int j) { return model.lambda[j](a); }
double eval_gamma(const ModelSpec& model, double a, int j) { return model.gamma[j](a); }

namespace {

AgeFunction parse_function(const Config& c, const std::string& section) {
  const std::string fam = c.get_string(section, "family");
  auto num = [&](const char* key) { return c.get_double(section, key); };
  if (fam == "constant") return AgeFunction::constant(num("value"));
  if (fam == "window") return AgeFunction::window(num("value"), num("cutoff"));
  if (fam == "delay") return AgeFunction::delay(num("value"), num("threshold"));
  if (fam == "exp_decay") return AgeFunction::exp_decay(num("value"), num("rate"));
  if (fam == "sigmoid") return AgeFunction::sigmoid(num("value"), num("midpoint"), num("slope"));
  if (fam == "tabulated") {
    const std::string tail = c.get_string(section, "tail", "constant");
    if (tail != "constant" && tail != "zero")
      throw ConfigError("[" + section + "] tail must be 'constant' or 'zero'");
    return AgeFunction::tabulated(c.get_list(section, "ages"), c.get_list(section, "values"),
                                  tail == "zero");
  }
  throw ConfigError("[" + section + "] unknown family '" + fam + "'");
}

void write_function(Config& c, const std::string& section, const AgeFunction& f) {
  c.set(section, "family", f.family_name());
  const auto& p = f.params();
  switch (f.family()) {
    case Family::constant: c.set(section, "value", p[0]); break;
    case Family::window: c.set(section, "value", p[0]); c.set(section, "cutoff", p[1]); break;
    case Family::delay: c.set(section, "value", p[0]); c.set(section, "threshold", p[1]); break;
    case Family::exp_decay: c.set(section, "value", p[0]); c.set(section, "rate", p[1]); break;
    case Family::sigmoid:
      c.set(section, "value", p[0]);
      c.set(section, "midpoint", p[1]);
      c.set(section, "slope", p[2]);
      break;
    case Family::tabulated: {
      std::string a, v;
      for (std::size_t i = 0; i < f.table_ages().size(); ++i) {
        a += (i ? " " : "") + format_double(f.table_ages()[i]);
        v += (i ? " " : "") + format_double(f.table_values()[i]);
      }
      c.set(section, "ages", a);
      c.set(section, "values", v);
      c.set(section, "tail", f.zero_tail() ? "zero" : "constant");
      break;
    }
  }
}

std::vector<AgeFunction> parse_per_trait(const Config& c, const std::string& name,
                                         const TraitGrid& traits) {
  std::vector<AgeFunction> out;
  const bool has_default = c.has_section(name);
  for (const auto& label : traits.labels) {
    const std::string sec = name + ":" + label;
    if (c.has_section(sec))
      out.push_back(parse_function(c, sec));
    else if (has_default)
      out.push_back(parse_function(c, name));
    else
      throw ConfigError("missing section [" + name + "]");
  }
  return out;
}

std::vector<double> read_numbers_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_numbers(ss.str());
}

std::string resolve(const Config& c, const std::string& p) {
  std::filesystem::path path(p);
  if (path.is_relative() && !c.base_dir().empty()) path = std::filesystem::path(c.base_dir()) / path;
  return path.string();
}

Eigen::MatrixXd read_matrix_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open kernel file '" + path + "'");
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    auto v = parse_numbers(line);
    if (!v.empty()) rows.push_back(std::move(v));
  }
  if (rows.empty()) throw ConfigError("empty kernel file '" + path + "'");
  Eigen::MatrixXd m(rows.size(), rows[0].size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows[0].size()) throw ConfigError("ragged kernel file '" + path + "'");
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
  }
  return m;
}

InitialAgeLaw parse_initial(const Config& c) {
  const std::string s = "initial";
  const std::string fam = c.get_string(s, "age_family");
  if (fam == "exponential") return InitialAgeLaw::exponential(c.get_double(s, "rate"));
  if (fam == "uniform") return InitialAgeLaw::uniform(c.get_double(s, "low"), c.get_double(s, "high"));
  if (fam == "gamma") return InitialAgeLaw::gamma(c.get_double(s, "shape"), c.get_double(s, "scale"));
  if (fam == "pareto") return InitialAgeLaw::pareto(c.get_double(s, "scale"), c.get_double(s, "shape"));
  if (fam == "point") return InitialAgeLaw::point(c.get_double(s, "value"));
  if (fam == "empirical") {
    if (c.has(s, "samples")) return InitialAgeLaw::empirical(c.get_list(s, "samples"));
    return InitialAgeLaw::empirical(read_numbers_file(resolve(c, c.get_string(s, "sample_file"))));
  }
  throw ConfigError("[initial] unknown age_family '" + fam + "'");
}

Eigen::VectorXd cumulative(const Eigen::VectorXd& v) {
  Eigen::VectorXd c(v.size());
  double s = 0;
  for (Eigen::Index i = 0; i < v.size(); ++i) c[i] = (s += v[i]);
  return c;
}

}  // namespace

ModelSpec build_model(const Config& c) {
  ModelSpec m;

  // traits
  if (c.has_section("traits")) {
    m.traits.labels = c.get_words("traits", "labels");
    auto w = c.get_list("traits", "weights");
    if (w.size() != m.traits.labels.size())
      throw ConfigError("[traits] labels and weights differ in length");
    m.traits.weights = Eigen::Map<Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
  } else {
    m.traits.labels = {"0"};
    m.traits.weights = Eigen::VectorXd::Ones(1);
  }
  const int J = m.traits.size();
  if (J < 1) throw ConfigError("[traits] needs at least one node");
  if (std::set<std::string>(m.traits.labels.begin(), m.traits.labels.end()).size() !=
      m.traits.labels.size())
    throw ConfigError("[traits] labels must be unique");
  if ((m.traits.weights.array() < 0).any())
    throw NormalizationError("[traits] weights must be nonnegative");
  if (std::abs(m.traits.weights.sum() - 1.0) > 1e-12)
    throw NormalizationError("[traits] weights sum to " + format_double(m.traits.weights.sum()));

  if (!c.has_section("initial")) throw ConfigError("missing section [initial]");
  if (!c.has_section("bounds")) throw ConfigError("missing section [bounds]");

  m.lambda = parse_per_trait(c, "lambda", m.traits);
  m.gamma = parse_per_trait(c, "gamma", m.traits);

  // kernel
  if (c.has(("kernel"), "matrix"))
    m.kernel = c.get_matrix("kernel", "matrix");
  else if (c.has("kernel", "file"))
    m.kernel = read_matrix_file(resolve(c, c.get_string("kernel", "file")));
  else if (J == 1)
    m.kernel = Eigen::MatrixXd::Ones(1, 1);
  else
    throw ConfigError("missing section [kernel]");
  if (m.kernel.rows() != J || m.kernel.cols() != J)
    throw ConfigError("[kernel] must be " + std::to_string(J) + "x" + std::to_string(J));
  if ((m.kernel.array() < 0).any() || !m.kernel.allFinite())
    throw ConfigError("[kernel] entries must be finite and nonnegative");
  const bool renormalize = c.get_bool("kernel", "renormalize", false);
  m.row_factors = Eigen::VectorXd::Ones(J);
  for (int i = 0; i < J; ++i) {
    const double s = m.kernel.row(i).dot(m.traits.weights);
    if (std::abs(s - 1.0) > 1e-10) {
      if (!renormalize || !(s > 0))
        throw NormalizationError("kernel row " + std::to_string(i) + " sums to " +
                                 format_double(s) + " against the trait weights");
      m.row_factors[i] = 1.0 / s;
      m.kernel.row(i) /= s;
      std::clog << "kernel row " << i << " renormalised by factor " << format_double(1.0 / s)
                << "\n";
    }
  }

  // initial condition
  m.initial_age = parse_initial(c);
  if (c.has("initial", "trait_probs")) {
    auto p = c.get_list("initial", "trait_probs");
    if (static_cast<int>(p.size()) != J) throw ConfigError("[initial] trait_probs has wrong length");
    m.trait_probs = Eigen::Map<Eigen::VectorXd>(p.data(), J);
  } else {
    m.trait_probs = m.traits.weights;
  }
  if ((m.trait_probs.array() < 0).any() || std::abs(m.trait_probs.sum() - 1.0) > 1e-12)
    throw NormalizationError("[initial] trait_probs must be a probability vector");

  // bounds
  m.lambda_star = c.get_double("bounds", "lambda_star");
  m.alpha = c.get_double("bounds", "alpha", 1.0);
  m.probe_max = c.get_double("bounds", "probe_max", 50.0);
  if (!(m.lambda_star > 0)) throw ConfigError("[bounds] lambda_star must be > 0");
  if (!m.initial_age.has_moment(2.0 * m.alpha))
    throw MomentError("initial age law '" + m.initial_age.name() + "' has no finite moment of order " +
                      format_double(2.0 * m.alpha));

  // probe grid, step 0.01, plus the breakpoints themselves
  for (int j = 0; j < J; ++j) {
    std::vector<double> probe;
    const int n = static_cast<int>(std::ceil(m.probe_max / 0.01));
    for (int k = 0; k <= n; ++k) probe.push_back(std::min(k * 0.01, m.probe_max));
    for (double b : m.lambda[j].breakpoints()) probe.push_back(b);
    for (double b : m.gamma[j].breakpoints()) probe.push_back(b);
    for (double a : probe) {
      const double l = m.lambda[j](a);
      const double g = m.gamma[j](a);
      if (!(l >= 0 && l <= m.lambda_star))
        throw BoundError("lambda(" + format_double(a) + ", " + m.traits.labels[j] + ") = " +
                         format_double(l) + " outside [0, lambda_star]");
      if (!(g >= 0 && g <= 1))
        throw BoundError("gamma(" + format_double(a) + ", " + m.traits.labels[j] + ") = " +
                         format_double(g) + " outside [0, 1]");
    }
  }

  m.kernel_sup = m.kernel.colwise().maxCoeff().transpose();
  m.kappa_bar = m.kernel_sup.dot(m.traits.weights);
  if (!std::isfinite(m.kappa_bar) || !(m.kappa_bar > 0))
    throw ConfigError("kappa_bar must be finite and positive");
  m.jump_cdf.resize(J, J);
  for (int i = 0; i < J; ++i)
    m.jump_cdf.row(i) =
        cumulative(m.kernel.row(i).transpose().cwiseProduct(m.traits.weights)).transpose();
  m.envelope_cdf = cumulative(m.kernel_sup.cwiseProduct(m.traits.weights) / m.kappa_bar);
  m.trait_cdf = cumulative(m.trait_probs);
  m.digest = model_to_config(m).digest();
  return m;
}

Config model_to_config(const ModelSpec& m) {
  Config c;
  std::string labels, weights, probs;
  for (int j = 0; j < m.num_traits(); ++j) {
    labels += (j ? " " : "") + m.traits.labels[j];
    weights += (j ? " " : "") + format_double(m.traits.weights[j]);
    probs += (j ? " " : "") + format_double(m.trait_probs[j]);
  }
  c.set("traits", "labels", labels);
  c.set("traits", "weights", weights);
  for (int j = 0; j < m.num_traits(); ++j) {
    write_function(c, "lambda:" + m.traits.labels[j], m.lambda[j]);
    write_function(c, "gamma:" + m.traits.labels[j], m.gamma[j]);
  }
  std::string k;
  for (Eigen::Index i = 0; i < m.kernel.rows(); ++i) {
    if (i) k += "; ";
    for (Eigen::Index j = 0; j < m.kernel.cols(); ++j)
      k += (j ? " " : "") + format_double(m.kernel(i, j));
  }
  c.set("kernel", "matrix", k);
  c.set("kernel", "renormalize", "false");

  const auto& law = m.initial_age;
  const auto& p = law.params();
  c.set("initial", "age_family", law.name());
  switch (law.law()) {
    case AgeLaw::exponential: c.set("initial", "rate", p[0]); break;
    case AgeLaw::uniform: c.set("initial", "low", p[0]); c.set("initial", "high", p[1]); break;
    case AgeLaw::gamma: c.set("initial", "shape", p[0]); c.set("initial", "scale", p[1]); break;
    case AgeLaw::pareto: c.set("initial", "scale", p[0]); c.set("initial", "shape", p[1]); break;
    case AgeLaw::point: c.set("initial", "value", p[0]); break;
    case AgeLaw::empirical: {
      std::string s;
      for (std::size_t i = 0; i < law.samples().size(); ++i)
        s += (i ? " " : "") + format_double(law.samples()[i]);
      c.set("initial", "samples", s);
      break;
    }
  }
  c.set("initial", "trait_probs", probs);
  c.set("bounds", "lambda_star", m.lambda_star);
  c.set("bounds", "alpha", m.alpha);
  c.set("bounds", "probe_max", m.probe_max);
  return c;
}

std::vector<Individual> sample_initial(const ModelSpec& model, int n, Rng& rng) {
  std::vector<Individual> out(static_cast<std::size_t>(n));
  const std::span<const double> cdf(model.trait_cdf.data(), model.trait_cdf.size());
  for (auto& ind : out) {
    ind.age = model.initial_age.sample(rng);
    ind.trait = rng.discrete(cdf);
  }
  return out;
}

int sample_new_trait(const ModelSpec& model, int i, Rng& rng) {
  return rng.discrete({model.jump_cdf.row(i).data(), static_cast<std::size_t>(model.num_traits())});
}

}  // namespace epiflux
