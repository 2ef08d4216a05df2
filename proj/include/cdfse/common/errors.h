// Copyright 2026 The CDFSE Authors. All Rights Reserved.
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

#ifndef CDFSE_COMMON_ERRORS_H_
#define CDFSE_COMMON_ERRORS_H_

#include <stdexcept>
#include <string>

namespace cdfse {

// Input that violates an operation's precondition (shape mismatch, empty
// sequence, out-of-range id).
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A configuration that cannot be built (even kernel, indivisible heads, ...).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Malformed file content. `line` is 1-based, 0 when not line oriented.
class FormatError : public std::runtime_error {
 public:
  FormatError(const std::string& what, int line = 0)
      : std::runtime_error(line > 0 ? what + " (line " + std::to_string(line) + ")"
                                    : what),
        line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

// API misuse (backward twice, optimizer step 0, empty batch).
class UsageError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace cdfse

#endif  // CDFSE_COMMON_ERRORS_H_
