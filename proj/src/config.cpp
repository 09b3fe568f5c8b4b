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

#include "epiflux/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>

#include "epiflux/errors.hpp"

namespace epiflux {

namespace pt = boost::property_tree;

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::vector<double> parse_numbers(const std::string& text) {
  std::vector<double> out;
  std::string t = text;
  std::replace(t.begin(), t.end(), ',', ' ');
  std::istringstream in(t);
  in.imbue(std::locale::classic());
  std::string tok;
  while (in >> tok) {
    double v = 0.0;
    auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
      throw ConfigError("not a number: '" + tok + "'");
    out.push_back(v);
  }
  return out;
}

Config Config::from_string(const std::string& text) {
  Config c;
  std::istringstream in(text);
  try {
    pt::read_ini(in, c.tree_);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  return c;
}

Config Config::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  Config c = from_string(ss.str());
  c.base_dir_ = std::filesystem::path(path).parent_path().string();
  return c;
}

namespace {

const pt::ptree* find_child(const pt::ptree& t, const std::string& key) {
  auto it = t.find(key);
  return it == t.not_found() ? nullptr : &it->second;
}

}  // namespace

bool Config::has_section(const std::string& section) const {
  return find_child(tree_, section) != nullptr;
}

bool Config::has(const std::string& section, const std::string& key) const {
  const auto* s = find_child(tree_, section);
  return s && find_child(*s, key);
}

std::vector<std::string> Config::sections() const {
  std::vector<std::string> out;
  for (const auto& kv : tree_) out.push_back(kv.first);
  return out;
}

std::vector<std::string> Config::keys(const std::string& section) const {
  std::vector<std::string> out;
  if (const auto* s = find_child(tree_, section))
    for (const auto& kv : *s) out.push_back(kv.first);
  return out;
}

std::string Config::get_string(const std::string& section, const std::string& key) const {
  const auto* s = find_child(tree_, section);
  if (!s) throw ConfigError("missing section [" + section + "]");
  const auto* v = find_child(*s, key);
  if (!v) throw ConfigError("missing key '" + key + "' in [" + section + "]");
  return boost::algorithm::trim_copy(v->data());
}

std::string Config::get_string(const std::string& section, const std::string& key,
                               const std::string& fallback) const {
  return has(section, key) ? get_string(section, key) : fallback;
}

double Config::get_double(const std::string& section, const std::string& key) const {
  auto v = parse_numbers(get_string(section, key));
  if (v.size() != 1)
    throw ConfigError("expected one number for '" + key + "' in [" + section + "]");
  return v[0];
}

double Config::get_double(const std::string& section, const std::string& key,
                          double fallback) const {
  return has(section, key) ? get_double(section, key) : fallback;
}

long Config::get_int(const std::string& section, const std::string& key, long fallback) const {
  if (!has(section, key)) return fallback;
  double v = get_double(section, key);
  if (v != std::floor(v)) throw ConfigError("expected integer for '" + key + "'");
  return static_cast<long>(v);
}

bool Config::get_bool(const std::string& section, const std::string& key, bool fallback) const {
  if (!has(section, key)) return fallback;
  auto s = boost::algorithm::to_lower_copy(get_string(section, key));
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw ConfigError("expected boolean for '" + key + "' in [" + section + "]");
}

std::vector<double> Config::get_list(const std::string& section, const std::string& key) const {
  return parse_numbers(get_string(section, key));
}

std::vector<std::string> Config::get_words(const std::string& section,
                                           const std::string& key) const {
  std::vector<std::string> out;
  std::string t = get_string(section, key);
  boost::algorithm::split(out, t, boost::is_any_of(", \t"), boost::token_compress_on);
  out.erase(std::remove(out.begin(), out.end(), std::string()), out.end());
  return out;
}

Eigen::MatrixXd Config::get_matrix(const std::string& section, const std::string& key) const {
  std::vector<std::string> rows;
  std::string t = get_string(section, key);
  boost::algorithm::split(rows, t, boost::is_any_of(";"));
  std::vector<std::vector<double>> vals;
  for (auto& r : rows) {
    auto v = parse_numbers(r);
    if (!v.empty()) vals.push_back(std::move(v));
  }
  if (vals.empty()) throw ConfigError("empty matrix '" + key + "'");
  const auto cols = vals[0].size();
  Eigen::MatrixXd m(vals.size(), cols);
  for (std::size_t i = 0; i < vals.size(); ++i) {
    if (vals[i].size() != cols) throw ConfigError("ragged matrix '" + key + "'");
    for (std::size_t j = 0; j < cols; ++j) m(i, j) = vals[i][j];
  }
  return m;
}

void Config::set(const std::string& section, const std::string& key, const std::string& value) {
  auto it = tree_.find(section);
  pt::ptree& s = it == tree_.not_found() ? tree_.push_back({section, pt::ptree()})->second
                                         : it->second;
  auto kit = s.find(key);
  if (kit == s.not_found())
    s.push_back({key, pt::ptree(value)});
  else
    kit->second.put_value(value);
}

void Config::set(const std::string& section, const std::string& key, double value) {
  set(section, key, format_double(value));
}

void Config::erase_section(const std::string& section) { tree_.erase(section); }

std::string Config::normalized() const {
  std::map<std::string, std::map<std::string, std::string>> sorted;
  for (const auto& sec : tree_)
    for (const auto& kv : sec.second)
      sorted[sec.first][kv.first] = boost::algorithm::trim_copy(kv.second.data());
  std::string out;
  for (const auto& [sec, kvs] : sorted) {
    out += "[" + sec + "]\n";
    for (const auto& [k, v] : kvs) out += k + " = " + v + "\n";
    out += "\n";
  }
  return out;
}

}  // namespace epiflux
