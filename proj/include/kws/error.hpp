// Copyright (c) 2026 The tdnn-kws Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace kws {

// Every failure the library reports derives from Error. The kind lets the
// CLI map failures onto exit codes without string matching.
enum class ErrorKind {
  kConfig,
  kShape,
  kInput,
  kInsufficientData,
  kIo,
  kBadMagic,
  kVersionMismatch,
  kTruncated,
  kDimension,
  kFormat,
  kNumeric,
  kDivergence,
  kUndefinedRate,
  kUnsupported,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

  // True for the model-file family of errors.
  bool is_model_format() const noexcept {
    switch (kind_) {
      case ErrorKind::kBadMagic:
      case ErrorKind::kVersionMismatch:
      case ErrorKind::kTruncated:
      case ErrorKind::kDimension:
      case ErrorKind::kFormat:
        return true;
      default:
        return false;
    }
  }

 private:
  ErrorKind kind_;
};

#define KWS_DEFINE_ERROR(Name, Kind)                               \
  class Name : public Error {                                      \
   public:                                                         \
    explicit Name(const std::string& what) : Error(Kind, what) {}  \
  }

KWS_DEFINE_ERROR(ConfigError, ErrorKind::kConfig);
KWS_DEFINE_ERROR(ShapeError, ErrorKind::kShape);
KWS_DEFINE_ERROR(InputError, ErrorKind::kInput);
KWS_DEFINE_ERROR(InsufficientDataError, ErrorKind::kInsufficientData);
KWS_DEFINE_ERROR(IoError, ErrorKind::kIo);
KWS_DEFINE_ERROR(BadMagicError, ErrorKind::kBadMagic);
KWS_DEFINE_ERROR(VersionMismatchError, ErrorKind::kVersionMismatch);
KWS_DEFINE_ERROR(TruncatedError, ErrorKind::kTruncated);
KWS_DEFINE_ERROR(DimensionError, ErrorKind::kDimension);
KWS_DEFINE_ERROR(FormatError, ErrorKind::kFormat);
KWS_DEFINE_ERROR(NumericError, ErrorKind::kNumeric);
KWS_DEFINE_ERROR(DivergenceError, ErrorKind::kDivergence);
KWS_DEFINE_ERROR(UndefinedRateError, ErrorKind::kUndefinedRate);
KWS_DEFINE_ERROR(UnsupportedError, ErrorKind::kUnsupported);

#undef KWS_DEFINE_ERROR

}  // namespace kws
