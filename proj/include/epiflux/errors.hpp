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

#ifndef EPIFLUX_ERRORS_HPP
#define EPIFLUX_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace epiflux {

/// Base class for every error raised by the library. `kind()` is the
/// machine-readable tag written to error records by the command line tool.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(what), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

#define EPIFLUX_DEFINE_ERROR(Name)                                   \
  class Name : public Error {                                        \
   public:                                                           \
    explicit Name(const std::string& what) : Error(#Name, what) {}   \
  };

EPIFLUX_DEFINE_ERROR(ConfigError)
EPIFLUX_DEFINE_ERROR(NormalizationError)
EPIFLUX_DEFINE_ERROR(BoundError)
EPIFLUX_DEFINE_ERROR(MomentError)
EPIFLUX_DEFINE_ERROR(GridError)
EPIFLUX_DEFINE_ERROR(GridMismatch)
EPIFLUX_DEFINE_ERROR(NonConvergence)
EPIFLUX_DEFINE_ERROR(UnknownBlock)
EPIFLUX_DEFINE_ERROR(FactorizationError)
EPIFLUX_DEFINE_ERROR(SingularStep)
EPIFLUX_DEFINE_ERROR(MissingFunctional)
EPIFLUX_DEFINE_ERROR(EventLogMissing)

#undef EPIFLUX_DEFINE_ERROR

}  // namespace epiflux

#endif  // EPIFLUX_ERRORS_HPP
