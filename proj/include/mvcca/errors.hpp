/*
 * mvcca: probabilistic canonical correlation analysis for matrix data.
 *
 * Copyright 2026 The mvcca authors
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
#pragma once

#include <stdexcept>
#include <string>

namespace mvcca {

/// Violated structural preconditions: dimension mismatches, malformed files,
/// out-of-range arguments. The CLI maps these to exit code 2.
class StructuralError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Numerical breakdown: matrices that stay indefinite after jitter, condition
/// estimates beyond the policy limit, non-finite objectives. CLI exit code 3.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw StructuralError(message);
}

}  // namespace mvcca
