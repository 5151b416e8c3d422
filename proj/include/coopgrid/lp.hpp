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

#include <vector>

// A small dense linear-programming solver: two-phase primal simplex on the
// full tableau with Bland's rule (lowest-index entering column, min-ratio
// leaving row with lowest-basis-index tie-break), which guarantees
// termination.  Intended for the least-core programs and other small dense
// problems; no sparsity, no scaling.

namespace coopgrid {

enum class LpStatus { Optimal, Infeasible, Unbounded };

struct LpConstraint {
  std::vector<double> coeffs;
  char relation;  // '<' for <=, '>' for >=, '=' for equality
  double rhs;
};

struct LpProblem {
  std::vector<double> objective;
  bool maximize = false;
  std::vector<LpConstraint> rows;
  // Per-variable x >= 0 flags; empty means every variable is free
  // (free variables are split internally).
  std::vector<bool> nonneg;
};

struct LpSolution {
  LpStatus status = LpStatus::Infeasible;
  double objective = 0.0;
  std::vector<double> x;
  // Shadow price per constraint row: d(objective)/d(rhs) at the optimum.
  std::vector<double> row_duals;
};

LpSolution tiny_lp_solve(const LpProblem& problem);

}  // namespace coopgrid
