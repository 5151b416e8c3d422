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

#include <cstdint>
#include <map>
#include <span>
#include <string>

#include "coopgrid/model.hpp"
#include "coopgrid/solver.hpp"

// Transferable-utility games over a community of prosumers.  A coalition's
// value is its maximum welfare: under decentralized control each member
// keeps its standalone schedule and the coalition pools net consumption for
// billing; under centralized control the coalition schedules jointly.
// Values for one billing period are tabulated over the full powerset
// (bitmask-indexed), then checked for superadditivity, core membership and
// balancedness (via the least-core LP).

namespace coopgrid {

inline constexpr double kGameTol = 1e-8;

enum class Scheme { Centralized, Decentralized };

const char* scheme_name(Scheme scheme);
Scheme scheme_from_name(const std::string& name);

struct GameTable {
  Scheme scheme = Scheme::Decentralized;
  int hour = 0;
  int num_players = 0;
  std::vector<double> values;  // indexed by coalition mask, size 2^num_players

  std::uint32_t grand_mask() const { return (1u << num_players) - 1u; }
  double value(std::uint32_t mask) const;
  double value(const Coalition& c) const { return value(c.mask()); }
  double grand_value() const { return value(grand_mask()); }
};

// Coalition value under decentralized control: members keep their
// standalone best responses (coalition-independent), the coalition is
// billed on the pooled net consumption.  `standalone` holds one solved
// best response per community player, indexed by player.
double value_decentralized(const Coalition& coalition,
                           std::span<const RegimeSolution> standalone,
                           const Prices& prices);

// Coalition value under centralized control (joint schedule).
double value_centralized(const Coalition& coalition,
                         std::span<const Prosumer> community,
                         const Prices& prices);

// Tabulate all 2^H coalition values.  build_table runs the per-coalition
// solves in parallel when OpenMP is available (identical results either
// way); build_table_serial is the plain-loop reference.
GameTable build_table(std::span<const Prosumer> community, Scheme scheme,
                      const Prices& prices, int hour);
GameTable build_table_serial(std::span<const Prosumer> community, Scheme scheme,
                             const Prices& prices, int hour);

// Superadditivity check over every disjoint nonempty pair:
// v(A) + v(B) <= v(A|B) + tol.  Returns the violating pairs (empty when
// the game is superadditive).
struct SuperadditivityViolation {
  std::uint32_t a = 0;
  std::uint32_t b = 0;
  double deficit = 0.0;  // v(A) + v(B) - v(A|B)
};
std::vector<SuperadditivityViolation> check_superadditive(
    const GameTable& table, double tol = kGameTol);

// Efficiency plus individual rationality, with human-readable reasons.
struct ImputationCheck {
  bool ok = false;
  std::vector<std::string> reasons;
};
ImputationCheck is_imputation(std::span<const double> payoffs,
                              const GameTable& table, double tol = kGameTol);

// Exhaustive core membership: imputation plus coalition rationality for
// every nonempty coalition.  Lists violated coalition masks.
struct CoreCheck {
  bool ok = false;
  ImputationCheck imputation;
  std::vector<std::uint32_t> violated;
};
CoreCheck in_core(std::span<const double> payoffs, const GameTable& table,
                  double tol = kGameTol);

// Balancedness via the least-core LP
//   min eps  s.t.  sum_{i in N} psi_i >= v(N) - eps  for all proper N,
//                  sum_i psi_i = v(grand).
// The core is nonempty iff eps* <= 1e-8; psi* is returned as certificate.
// Solved through the LP dual (H+1 rows) for tractability at H <= 12.
struct CoreCertificate {
  bool nonempty = false;
  double epsilon = 0.0;
  std::vector<double> payoffs;
};
CoreCertificate core_nonempty(const GameTable& table);

// Checks one balanced map: weights alpha over coalitions with
// sum_{N containing i} alpha(N) = 1 for every player (validated), then
// tests the balancedness inequality sum alpha(N) v(N) <= v(grand) + tol.
bool check_balanced_map(const GameTable& table,
                        const std::map<std::uint32_t, double>& alpha,
                        double tol = kGameTol);

// JSON round-trip for caching tables between CLI invocations.
std::string table_to_json(const GameTable& table);
GameTable table_from_json(const std::string& text);

}  // namespace coopgrid
