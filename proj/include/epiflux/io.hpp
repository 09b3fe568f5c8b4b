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

#ifndef EPIFLUX_IO_HPP
#define EPIFLUX_IO_HPP

#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <string>
#include <vector>

namespace epiflux {

inline constexpr const char* kVersion = "0.1.0";

/// RFC 4180 CSV assembled in memory; numbers in shortest round-trip form.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header);
  CsvTable& row(const std::vector<std::string>& cells);
  std::string str() const { return text_; }
  std::size_t rows() const { return rows_; }

  static std::string cell(double v);
  static std::string cell(long v);
  static std::string cell(int v) { return cell(static_cast<long>(v)); }
  static std::string cell(const std::string& s);

 private:
  std::size_t width_;
  std::size_t rows_ = 0;
  std::string text_;
};

/// Output directory of one command. Files are recorded with their FNV-1a
/// checksums; commit() writes manifest.json, fail() removes everything
/// written so far and leaves error.json.
class RunDirectory {
 public:
  RunDirectory(std::filesystem::path dir, std::string command, std::uint64_t config_digest,
               std::uint64_t seed);

  void write(const std::string& name, const std::string& content);
  void note(const std::string& key, const std::string& value);
  void commit();
  void fail(const std::string& kind, const std::string& message);

  const std::filesystem::path& path() const { return dir_; }

 private:
  struct Entry {
    std::string name;
    std::uint64_t checksum;
    std::size_t bytes;
  };
  std::filesystem::path dir_;
  std::string command_;
  std::uint64_t digest_, seed_;
  std::string started_;
  std::vector<Entry> files_;
  std::vector<std::pair<std::string, std::string>> notes_;
};

std::string file_checksum(const std::filesystem::path& p);
std::string utc_timestamp();

}  // namespace epiflux

#endif  // EPIFLUX_IO_HPP
