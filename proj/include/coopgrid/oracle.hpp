// Copyright 2026 The coopgrid Authors.
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

#include <span>

#include "coopgrid/model.hpp"

// Brute-force welfare maximization by exhaustive search over a discretized
// device box, honoring the per-member operating envelopes.  Independent of
// the threshold solver: every grid point is evaluated through the model
// primitives only.  Used as the test oracle; the returned welfare is a
// lower bound on the true optimum.

namespace coopgrid {

struct OracleResult {
  bool found = false;     // false when no grid point satisfies the envelopes
  double welfare = 0.0;
  std::vector<std::vector<double>> d;  // per member, per device
};

// Single exhaustive pass at the given resolution (grid step per device
// dimension; box upper corners are always included).  Throws
// std::invalid_argument when the grid exceeds 10^7 points.
OracleResult grid_oracle(std::span<const Prosumer> members,
                         const Prices& prices, double resolution);

// Iterated exhaustive passes on boxes shrinking around the incumbent:
// each round runs the same discretized exhaustion on a box two cells wide
// around the previous best point.  Tightens the lower bound to well below
// the per-round grid error.
OracleResult refined_grid_search(std::span<const Prosumer> members,
                                 const Prices& prices, int points_per_dim,
                                 int rounds);

}  // namespace coopgrid
