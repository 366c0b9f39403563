// Copyright 2026 The maclr Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef MACLR_ERRORS_HPP_
#define MACLR_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace maclr {

// Coarse error classes; the CLI maps them to exit codes 1, 2 and 3.
enum class ErrorKind { kUsage, kData, kNumeric };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

#define MACLR_DEFINE_ERROR(Name, Kind)                                  \
  class Name : public Error {                                           \
   public:                                                              \
    explicit Name(const std::string& what) : Error(ErrorKind::Kind, what) {} \
  }

MACLR_DEFINE_ERROR(DimensionError, kUsage);
MACLR_DEFINE_ERROR(RangeError, kUsage);
MACLR_DEFINE_ERROR(ParameterError, kUsage);
MACLR_DEFINE_ERROR(PreconditionError, kUsage);
MACLR_DEFINE_ERROR(ConfigError, kUsage);
MACLR_DEFINE_ERROR(ParseError, kData);
MACLR_DEFINE_ERROR(IntegrityError, kData);
MACLR_DEFINE_ERROR(FormatError, kData);
MACLR_DEFINE_ERROR(CompatibilityError, kData);
MACLR_DEFINE_ERROR(NumericError, kNumeric);

#undef MACLR_DEFINE_ERROR

}  // namespace maclr

#endif  // MACLR_ERRORS_HPP_
