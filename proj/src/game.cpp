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

#include "coopgrid/game.hpp"

#include <cmath>
#include <cstdlib>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "coopgrid/lp.hpp"
#include "coopgrid/util.hpp"
#include "json.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace coopgrid {

namespace {

std::vector<Prosumer> subset(std::span<const Prosumer> community,
                             std::uint32_t mask) {
  std::vector<Prosumer> members;
  for (std::size_t i = 0; i < community.size(); ++i)
    if ((mask >> i) & 1u) members.push_back(community[i]);
  return members;
}

void check_community(std::span<const Prosumer> community) {
  if (community.empty())
    throw std::invalid_argument("game: empty community");
  if (community.size() > static_cast<std::size_t>(kMaxPlayers))
    throw std::invalid_argument("game: more than 20 players");
}

}  // namespace

int thread_cap() {
#ifdef _OPENMP
  int cap = omp_get_max_threads();
  if (const char* env = std::getenv("COOPGRID_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1 && v < cap) cap = static_cast<int>(v);
  }
  return cap;
#else
  return 1;
#endif
}

const char* scheme_name(Scheme scheme) {
  return scheme == Scheme::Centralized ? "centralized" : "decentralized";
}

Scheme scheme_from_name(const std::string& name) {
  if (name == "centralized") return Scheme::Centralized;
  if (name == "decentralized") return Scheme::Decentralized;
  throw std::invalid_argument("unknown scheme: " + name);
}

double GameTable::value(std::uint32_t mask) const {
  if (mask >= values.size())
    throw std::invalid_argument("GameTable: coalition outside community");
  return values[mask];
}

double value_decentralized(const Coalition& coalition,
                           std::span<const RegimeSolution> standalone,
                           const Prices& prices) {
  if (coalition.empty()) return 0.0;
  double welfare_sum = 0.0;
  double payment_sum = 0.0;
  double z_total = 0.0;
  for (int i : coalition.members()) {
    if (static_cast<std::size_t>(i) >= standalone.size())
      throw std::invalid_argument(
          "value_decentralized: coalition member without a schedule");
    const auto& sched = standalone[static_cast<std::size_t>(i)].schedule;
    const double z = sched.members.at(0).z;
    welfare_sum += sched.welfare;
    payment_sum += payment(z, prices);
    z_total += z;
  }
  // Standalone surpluses plus the billing gain from pooling net consumption.
  return welfare_sum + (payment_sum - payment(z_total, prices));
}

double value_centralized(const Coalition& coalition,
                         std::span<const Prosumer> community,
                         const Prices& prices) {
  if (coalition.empty()) return 0.0;
  for (int i : coalition.members())
    if (static_cast<std::size_t>(i) >= community.size())
      throw std::invalid_argument(
          "value_centralized: coalition member outside community");
  const auto members = subset(community, coalition.mask());
  return centralized_schedule(members, prices).schedule.welfare;
}

namespace {

GameTable build_table_impl(std::span<const Prosumer> community, Scheme scheme,
                           const Prices& prices, int hour, int threads) {
  check_community(community);
  const int n = static_cast<int>(community.size());
  GameTable table;
  table.scheme = scheme;
  table.hour = hour;
  table.num_players = n;
  table.values.assign(std::size_t{1} << n, 0.0);
  const std::uint32_t grand = table.grand_mask();

  if (scheme == Scheme::Decentralized) {
    std::vector<RegimeSolution> standalone;
    standalone.reserve(community.size());
    for (const auto& p : community)
      standalone.push_back(best_response(p, prices));
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(threads)
#endif
    for (std::int64_t mask = 1; mask <= static_cast<std::int64_t>(grand);
         ++mask)
      table.values[static_cast<std::size_t>(mask)] = value_decentralized(
          Coalition(static_cast<std::uint32_t>(mask)), standalone, prices);
  } else {
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(threads)
#endif
    for (std::int64_t mask = 1; mask <= static_cast<std::int64_t>(grand);
         ++mask)
      table.values[static_cast<std::size_t>(mask)] = value_centralized(
          Coalition(static_cast<std::uint32_t>(mask)), community, prices);
  }
  return table;
}

}  // namespace

GameTable build_table(std::span<const Prosumer> community, Scheme scheme,
                      const Prices& prices, int hour) {
  return build_table_impl(community, scheme, prices, hour, thread_cap());
}

GameTable build_table_serial(std::span<const Prosumer> community, Scheme scheme,
                             const Prices& prices, int hour) {
  return build_table_impl(community, scheme, prices, hour, 1);
}

std::vector<SuperadditivityViolation> check_superadditive(
    const GameTable& table, double tol) {
  std::vector<SuperadditivityViolation> violations;
  const std::uint32_t grand = table.grand_mask();
  for (std::uint32_t u = 1; u <= grand; ++u) {
    // Proper nonempty submasks a of u; b is the complement within u.
    for (std::uint32_t a = (u - 1) & u; a > 0; a = (a - 1) & u) {
      const std::uint32_t b = u ^ a;
      if (a > b) continue;  // each disjoint pair once
      const double deficit =
          table.values[a] + table.values[b] - table.values[u];
      if (deficit > tol) violations.push_back({a, b, deficit});
    }
  }
  return violations;
}

ImputationCheck is_imputation(std::span<const double> payoffs,
                              const GameTable& table, double tol) {
  if (payoffs.size() != static_cast<std::size_t>(table.num_players))
    throw std::invalid_argument("is_imputation: payoff size mismatch");
  ImputationCheck check;
  double sum = 0.0;
  for (double v : payoffs) sum += v;
  if (std::abs(sum - table.grand_value()) > tol) {
    std::ostringstream msg;
    msg << "efficiency: sum(psi) = " << sum << " but v(grand) = "
        << table.grand_value();
    check.reasons.push_back(msg.str());
  }
  for (int i = 0; i < table.num_players; ++i) {
    const double vi = table.values[1u << i];
    if (payoffs[static_cast<std::size_t>(i)] < vi - tol) {
      std::ostringstream msg;
      msg << "individual rationality: player " << i << ": psi = "
          << payoffs[static_cast<std::size_t>(i)] << " < v({i}) = " << vi;
      check.reasons.push_back(msg.str());
    }
  }
  check.ok = check.reasons.empty();
  return check;
}

CoreCheck in_core(std::span<const double> payoffs, const GameTable& table,
                  double tol) {
  CoreCheck check;
  check.imputation = is_imputation(payoffs, table, tol);
  const std::uint32_t grand = table.grand_mask();
  for (std::uint32_t mask = 1; mask < grand; ++mask) {
    double sum = 0.0;
    for (int i = 0; i < table.num_players; ++i)
      if ((mask >> i) & 1u) sum += payoffs[static_cast<std::size_t>(i)];
    if (sum < table.values[mask] - tol) check.violated.push_back(mask);
  }
  check.ok = check.imputation.ok && check.violated.empty();
  return check;
}

CoreCertificate core_nonempty(const GameTable& table) {
  const int n = table.num_players;
  if (n > 12)
    throw std::invalid_argument("core_nonempty: least-core LP limited to 12 players");
  CoreCertificate cert;
  if (n == 1) {
    cert.nonempty = true;
    cert.epsilon = 0.0;
    cert.payoffs = {table.grand_value()};
    return cert;
  }

  // Dual of the least-core LP: one variable y_N >= 0 per proper nonempty
  // coalition plus a free lambda for the efficiency row;
  //   max sum v(N) y_N + v(grand) lambda
  //   s.t. sum_{N ni i} y_N + lambda = 0 per player, sum y_N = 1.
  // The optimal psi/eps of the least-core program are the shadow prices of
  // these H+1 equality rows.
  const std::uint32_t grand = table.grand_mask();
  const std::size_t num_y = grand - 1u;  // masks 1 .. grand-1
  LpProblem dual;
  dual.maximize = true;
  dual.objective.resize(num_y + 1);
  dual.nonneg.assign(num_y + 1, true);
  dual.nonneg[num_y] = false;  // lambda
  for (std::uint32_t mask = 1; mask < grand; ++mask)
    dual.objective[mask - 1] = table.values[mask];
  dual.objective[num_y] = table.grand_value();

  dual.rows.resize(static_cast<std::size_t>(n) + 1);
  for (int i = 0; i <= n; ++i) {
    auto& row = dual.rows[static_cast<std::size_t>(i)];
    row.coeffs.assign(num_y + 1, 0.0);
    row.relation = '=';
    if (i < n) {
      for (std::uint32_t mask = 1; mask < grand; ++mask)
        if ((mask >> i) & 1u) row.coeffs[mask - 1] = 1.0;
      row.coeffs[num_y] = 1.0;
      row.rhs = 0.0;
    } else {
      for (std::uint32_t mask = 1; mask < grand; ++mask)
        row.coeffs[mask - 1] = 1.0;
      row.rhs = 1.0;
    }
  }

  const LpSolution sol = tiny_lp_solve(dual);
  if (sol.status != LpStatus::Optimal)
    throw std::runtime_error("core_nonempty: least-core LP failed");
  cert.epsilon = sol.objective;
  cert.nonempty = cert.epsilon <= kGameTol;
  cert.payoffs.assign(sol.row_duals.begin(),
                      sol.row_duals.begin() + n);
  return cert;
}

bool check_balanced_map(const GameTable& table,
                        const std::map<std::uint32_t, double>& alpha,
                        double tol) {
  const std::uint32_t grand = table.grand_mask();
  for (const auto& [mask, weight] : alpha) {
    if (mask == 0 || mask > grand)
      throw std::invalid_argument("check_balanced_map: bad coalition mask");
    if (!(weight >= -1e-12 && weight <= 1.0 + 1e-12))
      throw std::invalid_argument("check_balanced_map: weight outside [0, 1]");
  }
  for (int i = 0; i < table.num_players; ++i) {
    double sum = 0.0;
    for (const auto& [mask, weight] : alpha)
      if ((mask >> i) & 1u) sum += weight;
    if (std::abs(sum - 1.0) > 1e-9) {
      std::ostringstream msg;
      msg << "check_balanced_map: weights for player " << i << " sum to "
          << sum;
      throw std::invalid_argument(msg.str());
    }
  }
  double lhs = 0.0;
  for (const auto& [mask, weight] : alpha) lhs += weight * table.values[mask];
  return lhs <= table.grand_value() + tol;
}

std::string table_to_json(const GameTable& table) {
  nlohmann::json doc;
  doc["scheme"] = scheme_name(table.scheme);
  doc["hour"] = table.hour;
  auto& values = doc["values"];
  values = nlohmann::json::array();
  for (std::size_t mask = 0; mask < table.values.size(); ++mask)
    values.push_back({{"coalition_mask", mask}, {"value", table.values[mask]}});
  return doc.dump(2);
}

GameTable table_from_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument(std::string("game table JSON: ") + e.what());
  }
  GameTable table;
  try {
    table.scheme = scheme_from_name(doc.at("scheme").get<std::string>());
    table.hour = doc.at("hour").get<int>();
    const auto& values = doc.at("values");
    if (!values.is_array() || values.empty())
      throw std::invalid_argument("game table JSON: bad values array");
    table.values.assign(values.size(),
                        std::numeric_limits<double>::quiet_NaN());
    for (const auto& entry : values) {
      const auto mask = entry.at("coalition_mask").get<std::size_t>();
      if (mask >= table.values.size() || !std::isnan(table.values[mask]))
        throw std::invalid_argument("game table JSON: bad coalition masks");
      table.values[mask] = entry.at("value").get<double>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("game table JSON: ") + e.what());
  }
  int n = 0;
  while ((std::size_t{1} << n) < table.values.size()) ++n;
  if ((std::size_t{1} << n) != table.values.size() || n < 1 || n > kMaxPlayers)
    throw std::invalid_argument("game table JSON: size is not a power of two");
  table.num_players = n;
  for (double v : table.values)
    if (std::isnan(v))
      throw std::invalid_argument("game table JSON: missing coalition value");
  if (table.values[0] != 0.0)
    throw std::invalid_argument("game table JSON: v(empty) must be 0");
  return table;
}

}  // namespace coopgrid
