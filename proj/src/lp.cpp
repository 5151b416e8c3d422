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

#include "coopgrid/lp.hpp"

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>

namespace coopgrid {

namespace {

constexpr double kEps = 1e-9;

struct Tableau {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> a;  // row-major body, B^{-1}A
  std::vector<double> b;  // B^{-1} rhs
  std::vector<std::size_t> basis;

  double& at(std::size_t r, std::size_t c) { return a[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return a[r * cols + c]; }

  void pivot(std::size_t pr, std::size_t pc) {
    const double inv = 1.0 / at(pr, pc);
    for (std::size_t c = 0; c < cols; ++c) at(pr, c) *= inv;
    b[pr] *= inv;
    at(pr, pc) = 1.0;
    for (std::size_t r = 0; r < rows; ++r) {
      if (r == pr) continue;
      const double f = at(r, pc);
      if (f == 0.0) continue;
      for (std::size_t c = 0; c < cols; ++c) at(r, c) -= f * at(pr, c);
      b[r] -= f * b[pr];
      at(r, pc) = 0.0;
    }
    basis[pr] = pc;
  }
};

// Runs simplex iterations with Bland's rule for the given per-column costs.
// allowed[c] == false keeps a column from entering (phase-2 artificials).
// Returns false when the problem is unbounded in this phase.
bool simplex(Tableau& t, const std::vector<double>& cost,
             const std::vector<bool>& allowed) {
  for (;;) {
    // Reduced costs via the current basis: rc_j = c_j - c_B' (B^{-1} a_j).
    std::size_t enter = t.cols;
    for (std::size_t c = 0; c < t.cols; ++c) {
      if (!allowed[c]) continue;
      double rc = cost[c];
      for (std::size_t r = 0; r < t.rows; ++r) {
        const double body = t.at(r, c);
        if (body != 0.0) rc -= cost[t.basis[r]] * body;
      }
      if (rc < -kEps) {
        enter = c;  // lowest index: Bland's entering rule
        break;
      }
    }
    if (enter == t.cols) return true;  // optimal for this phase

    std::size_t leave = t.rows;
    double best_ratio = std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < t.rows; ++r) {
      const double body = t.at(r, enter);
      if (body <= kEps) continue;
      const double ratio = t.b[r] / body;
      if (leave == t.rows || ratio < best_ratio ||
          (ratio == best_ratio && t.basis[r] < t.basis[leave])) {
        best_ratio = ratio;
        leave = r;
      }
    }
    if (leave == t.rows) return false;  // unbounded ray
    t.pivot(leave, enter);
  }
}

}  // namespace

LpSolution tiny_lp_solve(const LpProblem& problem) {
  const std::size_t n = problem.objective.size();
  if (n == 0) throw std::invalid_argument("tiny_lp_solve: empty objective");
  if (!problem.nonneg.empty() && problem.nonneg.size() != n)
    throw std::invalid_argument("tiny_lp_solve: nonneg size mismatch");
  for (const auto& row : problem.rows) {
    if (row.coeffs.size() != n)
      throw std::invalid_argument("tiny_lp_solve: row width mismatch");
    if (row.relation != '<' && row.relation != '>' && row.relation != '=')
      throw std::invalid_argument("tiny_lp_solve: bad relation");
    if (!std::isfinite(row.rhs))
      throw std::invalid_argument("tiny_lp_solve: non-finite rhs");
    for (double v : row.coeffs)
      if (!std::isfinite(v))
        throw std::invalid_argument("tiny_lp_solve: non-finite coefficient");
  }
  for (double v : problem.objective)
    if (!std::isfinite(v))
      throw std::invalid_argument("tiny_lp_solve: non-finite objective");

  const std::size_t m = problem.rows.size();
  const auto var_nonneg = [&](std::size_t j) {
    return problem.nonneg.empty() ? false : static_cast<bool>(problem.nonneg[j]);
  };

  // Column layout: for each variable one column (nonneg) or a split pair
  // (free, x = u - v); then one slack/surplus column per inequality row;
  // then one artificial column per row that needs one.
  std::vector<std::size_t> var_col(n);
  std::size_t structural = 0;
  for (std::size_t j = 0; j < n; ++j) {
    var_col[j] = structural;
    structural += var_nonneg(j) ? 1 : 2;
  }

  std::vector<double> rhs(m);
  std::vector<char> rel(m);
  std::vector<double> row_sign(m, 1.0);
  for (std::size_t r = 0; r < m; ++r) {
    rhs[r] = problem.rows[r].rhs;
    rel[r] = problem.rows[r].relation;
    if (rhs[r] < 0.0) {  // normalize to b >= 0
      rhs[r] = -rhs[r];
      row_sign[r] = -1.0;
      rel[r] = (rel[r] == '<') ? '>' : (rel[r] == '>') ? '<' : '=';
    }
  }

  std::size_t slack_cols = 0;
  for (std::size_t r = 0; r < m; ++r)
    if (rel[r] != '=') ++slack_cols;

  const std::size_t slack_base = structural;
  const std::size_t art_base = slack_base + slack_cols;
  const std::size_t total = art_base + m;  // one artificial slot per row

  Tableau t;
  t.rows = m;
  t.cols = total;
  t.a.assign(m * total, 0.0);
  t.b = rhs;
  t.basis.assign(m, 0);

  std::vector<bool> is_artificial(total, false);
  std::vector<std::size_t> identity_col(m);
  std::size_t next_slack = slack_base;
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t j = 0; j < n; ++j) {
      const double v = row_sign[r] * problem.rows[r].coeffs[j];
      if (v == 0.0) continue;
      t.at(r, var_col[j]) = v;
      if (!var_nonneg(j)) t.at(r, var_col[j] + 1) = -v;
    }
    if (rel[r] == '<') {
      t.at(r, next_slack) = 1.0;
      t.basis[r] = next_slack;
      identity_col[r] = next_slack;
      ++next_slack;
    } else {
      if (rel[r] == '>') t.at(r, next_slack++) = -1.0;
      const std::size_t art = art_base + r;
      t.at(r, art) = 1.0;
      t.basis[r] = art;
      is_artificial[art] = true;
      identity_col[r] = art;
    }
  }

  // Phase 1: minimize the sum of artificials.
  std::vector<double> cost1(total, 0.0);
  bool need_phase1 = false;
  for (std::size_t c = art_base; c < total; ++c)
    if (is_artificial[c]) {
      cost1[c] = 1.0;
      need_phase1 = true;
    }

  LpSolution sol;
  std::vector<bool> allow_all(total, true);
  if (need_phase1) {
    if (!simplex(t, cost1, allow_all))
      throw std::runtime_error("tiny_lp_solve: phase 1 unbounded");
    double infeas = 0.0;
    for (std::size_t r = 0; r < m; ++r)
      if (is_artificial[t.basis[r]]) infeas += t.b[r];
    if (infeas > 1e-7) {
      sol.status = LpStatus::Infeasible;
      return sol;
    }
    // Pivot basic artificials out where possible; a row with no eligible
    // column is redundant and keeps its artificial basic at zero.
    for (std::size_t r = 0; r < m; ++r) {
      if (!is_artificial[t.basis[r]]) continue;
      for (std::size_t c = 0; c < art_base; ++c) {
        if (std::abs(t.at(r, c)) > 1e-7) {
          t.pivot(r, c);
          break;
        }
      }
    }
  }

  // Phase 2: original costs; artificials may not re-enter.
  std::vector<double> cost2(total, 0.0);
  const double sense = problem.maximize ? -1.0 : 1.0;
  for (std::size_t j = 0; j < n; ++j) {
    cost2[var_col[j]] = sense * problem.objective[j];
    if (!var_nonneg(j)) cost2[var_col[j] + 1] = -sense * problem.objective[j];
  }
  std::vector<bool> allowed(total, true);
  for (std::size_t c = 0; c < total; ++c)
    if (is_artificial[c]) allowed[c] = false;

  if (!simplex(t, cost2, allowed)) {
    sol.status = LpStatus::Unbounded;
    return sol;
  }

  sol.status = LpStatus::Optimal;
  std::vector<double> col_value(total, 0.0);
  double internal_obj = 0.0;
  for (std::size_t r = 0; r < m; ++r) {
    col_value[t.basis[r]] = t.b[r];
    internal_obj += cost2[t.basis[r]] * t.b[r];
  }
  sol.objective = sense * internal_obj;
  sol.x.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    sol.x[j] = col_value[var_col[j]];
    if (!var_nonneg(j)) sol.x[j] -= col_value[var_col[j] + 1];
  }

  // Shadow prices y = c_B' B^{-1}, read through each row's identity-origin
  // column, then mapped back through row normalization and objective sense.
  sol.row_duals.resize(m);
  for (std::size_t r = 0; r < m; ++r) {
    double y = 0.0;
    for (std::size_t rr = 0; rr < m; ++rr) {
      const double body = t.at(rr, identity_col[r]);
      if (body != 0.0) y += cost2[t.basis[rr]] * body;
    }
    sol.row_duals[r] = sense * row_sign[r] * y;
  }
  return sol;
}

}  // namespace coopgrid
