// Copyright 2026 The projtag Authors. All Rights Reserved.
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

namespace projtag {

/// Root of every exception thrown by the library. The CLI maps anything
/// derived from this to exit code 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define PROJTAG_DEFINE_ERROR(Name)        \
  class Name : public Error {             \
   public:                                \
    using Error::Error;                   \
  };

PROJTAG_DEFINE_ERROR(TagSetError)
PROJTAG_DEFINE_ERROR(SegmentationError)
PROJTAG_DEFINE_ERROR(ModelError)
PROJTAG_DEFINE_ERROR(InfeasibleConstraintError)
PROJTAG_DEFINE_ERROR(AlignError)
PROJTAG_DEFINE_ERROR(CorpusError)
PROJTAG_DEFINE_ERROR(DataError)
PROJTAG_DEFINE_ERROR(EvalError)

#undef PROJTAG_DEFINE_ERROR

/// Parse failure with file/line/token coordinates. `token` is 0-based and
/// -1 when the error concerns the whole line.
class FormatError : public Error {
 public:
  FormatError(const std::string& file, std::size_t line, long token,
              const std::string& what)
      : Error(Describe(file, line, token, what)),
        file_(file),
        line_(line),
        token_(token) {}

  const std::string& file() const { return file_; }
  std::size_t line() const { return line_; }
  long token() const { return token_; }

 private:
  static std::string Describe(const std::string& file, std::size_t line,
                              long token, const std::string& what) {
    std::string s = file + ":" + std::to_string(line);
    if (token >= 0) s += ": token " + std::to_string(token);
    return s + ": " + what;
  }

  std::string file_;
  std::size_t line_;
  long token_;
};

}  // namespace projtag
