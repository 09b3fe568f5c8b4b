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

#ifndef EPIFLUX_CONFIG_HPP
#define EPIFLUX_CONFIG_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <boost/property_tree/ptree.hpp>

namespace epiflux {

/// FNV-1a 64-bit, used for config/model digests and file checksums.
constexpr std::uint64_t kFnvOffset = 1469598103934665603ULL;
constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

inline std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = kFnvOffset) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= kFnvPrime;
  }
  return h;
}

std::string hex64(std::uint64_t v);

/// Shortest round-trip decimal form, locale independent.
std::string format_double(double v);

/// INI-style configuration: "[section]" headers, "key = value" lines,
/// '#' or ';' comments. Section names may carry a qualifier after a colon
/// ("[lambda:B]").
class Config {
 public:
  Config() = default;
  static Config from_file(const std::string& path);
  static Config from_string(const std::string& text);

  bool has_section(const std::string& section) const;
  bool has(const std::string& section, const std::string& key) const;
  std::vector<std::string> sections() const;
  std::vector<std::string> keys(const std::string& section) const;

  /// Throws ConfigError naming section/key when missing.
  std::string get_string(const std::string& section, const std::string& key) const;
  std::string get_string(const std::string& section, const std::string& key,
                         const std::string& fallback) const;
  double get_double(const std::string& section, const std::string& key) const;
  double get_double(const std::string& section, const std::string& key, double fallback) const;
  long get_int(const std::string& section, const std::string& key, long fallback) const;
  bool get_bool(const std::string& section, const std::string& key, bool fallback) const;
  /// Whitespace or comma separated numbers.
  std::vector<double> get_list(const std::string& section, const std::string& key) const;
  std::vector<std::string> get_words(const std::string& section, const std::string& key) const;
  /// Rows separated by ';'.
  Eigen::MatrixXd get_matrix(const std::string& section, const std::string& key) const;

  void set(const std::string& section, const std::string& key, const std::string& value);
  void set(const std::string& section, const std::string& key, double value);
  void erase_section(const std::string& section);

  /// Sections and keys sorted, values trimmed. Stable under reordering.
  std::string normalized() const;
  std::uint64_t digest() const { return fnv1a(normalized()); }

  /// Directory the config was read from (for relative sample/matrix files).
  const std::string& base_dir() const { return base_dir_; }

 private:
  boost::property_tree::ptree tree_;
  std::string base_dir_;
};

std::vector<double> parse_numbers(const std::string& text);

}  // namespace epiflux

#endif  // EPIFLUX_CONFIG_HPP
