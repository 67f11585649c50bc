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

#include <string>
#include <utility>
#include <vector>

namespace mvcca {

/// One fit iteration: the objective (log-likelihood or lower bound) plus the
/// Frobenius movement of each named parameter matrix since the previous one.
struct TraceRow {
  int iteration = 0;
  double objective = 0.0;
  std::vector<std::pair<std::string, double>> deltas;
};

struct FitTrace {
  std::vector<TraceRow> rows;
};

}  // namespace mvcca
