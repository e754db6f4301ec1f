// Copyright 2026 The hcomb Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace hcomb {

// Every failure raised by the library carries a kind, which the CLI maps onto
// its exit-code contract (see exit_code below).
enum class ErrorKind {
  kConfig,        // invalid parameters / flags
  kDomain,        // argument outside the mathematical domain
  kShape,         // matrix/vector dimensions disagree
  kFormat,        // malformed WAV / HCF1 / CSV content
  kRate,          // unsupported sample rate
  kIo,            // file could not be opened/read/written
  kVerification,  // numerical self-check failed
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

struct ConfigError : Error {
  explicit ConfigError(const std::string& w) : Error(ErrorKind::kConfig, w) {}
};
struct DomainError : Error {
  explicit DomainError(const std::string& w) : Error(ErrorKind::kDomain, w) {}
};
struct ShapeError : Error {
  explicit ShapeError(const std::string& w) : Error(ErrorKind::kShape, w) {}
};
struct FormatError : Error {
  explicit FormatError(const std::string& w) : Error(ErrorKind::kFormat, w) {}
};
struct RateError : Error {
  explicit RateError(const std::string& w) : Error(ErrorKind::kRate, w) {}
};
struct IoError : Error {
  explicit IoError(const std::string& w) : Error(ErrorKind::kIo, w) {}
};
struct VerificationError : Error {
  explicit VerificationError(const std::string& w)
      : Error(ErrorKind::kVerification, w) {}
};

// Process exit codes: 0 success, 2 usage, 3 data/shape, 4 numerical
// verification failure.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitVerification = 4;

inline int exit_code(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::kConfig:
      return kExitUsage;
    case ErrorKind::kVerification:
      return kExitVerification;
    default:
      return kExitData;
  }
}

}  // namespace hcomb
