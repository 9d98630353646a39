// emoconv/errors.hpp

// Copyright 2026  The emoconv authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef EMOCONV_ERRORS_HPP_
#define EMOCONV_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace emoconv {

/// Base class of every error thrown by this library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Filesystem-level failure: missing file, unwritable path, short write.
class IoError : public Error {
 public:
  using Error::Error;
};

/// A file exists and is readable but does not follow the expected layout
/// (bad magic, wrong version, truncated payload). Distinct from IoError.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Tensor/matrix/contour dimension disagreement. Message names both shapes.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values, diverging integrations, failed factorizations.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration: bad hyperparameter, arch constraint violation.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Corpus-level inconsistency: missing momenta file, unmatched pair ids.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Inputs that make an operation meaningless (utterance shorter than the
/// context window, empty voiced selection, zero-variance t-test samples).
class DegenerateInputError : public Error {
 public:
  using Error::Error;
};

}  // namespace emoconv

#endif  // EMOCONV_ERRORS_HPP_
