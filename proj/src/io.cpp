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

#include "epiflux/io.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "epiflux/config.hpp"
#include "epiflux/errors.hpp"

namespace epiflux {

namespace fs = std::filesystem;

CsvTable::CsvTable(std::vector<std::string> header) : width_(header.size()) {
  row(header);
  rows_ = 0;
}

CsvTable& CsvTable::row(const std::vector<std::string>& cells) {
  if (cells.size() != width_) throw Error("InternalError", "CSV row width mismatch");
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) text_ += ',';
    text_ += cells[i];
  }
  text_ += "\r\n";
  ++rows_;
  return *this;
}

std::string CsvTable::cell(double v) { return format_double(v); }
std::string CsvTable::cell(long v) { return std::to_string(v); }

std::string CsvTable::cell(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + "\"";
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string file_checksum(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return hex64(fnv1a(ss.str()));
}

RunDirectory::RunDirectory(fs::path dir, std::string command, std::uint64_t config_digest,
                           std::uint64_t seed)
    : dir_(std::move(dir)), command_(std::move(command)), digest_(config_digest), seed_(seed),
      started_(utc_timestamp()) {
  std::error_code ec;
  fs::create_directories(dir_, ec);
  if (ec) throw ConfigError("cannot create output directory " + dir_.string() + ": " + ec.message());
  fs::remove(dir_ / "error.json", ec);
}

void RunDirectory::write(const std::string& name, const std::string& content) {
  const fs::path p = dir_ / name;
  std::ofstream out(p, std::ios::binary);
  out << content;
  if (!out) throw ConfigError("cannot write " + p.string());
  files_.push_back({name, fnv1a(content), content.size()});
}

void RunDirectory::note(const std::string& key, const std::string& value) {
  notes_.emplace_back(key, value);
}

void RunDirectory::commit() {
  nlohmann::ordered_json j;
  j["command"] = command_;
  j["config_digest"] = hex64(digest_);
  j["seed"] = seed_;
  j["version"] = kVersion;
  j["started"] = started_;
  j["finished"] = utc_timestamp();
  j["files"] = nlohmann::ordered_json::array();
  for (const auto& f : files_)
    j["files"].push_back({{"name", f.name}, {"fnv1a64", hex64(f.checksum)}, {"bytes", f.bytes}});
  for (const auto& [k, v] : notes_) j["notes"][k] = v;
  std::ofstream out(dir_ / "manifest.json");
  out << j.dump(2) << "\n";
}

void RunDirectory::fail(const std::string& kind, const std::string& message) {
  std::error_code ec;
  for (const auto& f : files_) fs::remove(dir_ / f.name, ec);
  fs::remove(dir_ / "manifest.json", ec);
  files_.clear();
  nlohmann::ordered_json j;
  j["command"] = command_;
  j["error"] = kind;
  j["message"] = message;
  j["config_digest"] = hex64(digest_);
  j["seed"] = seed_;
  std::ofstream out(dir_ / "error.json");
  out << j.dump(2) << "\n";
}

}  // namespace epiflux
