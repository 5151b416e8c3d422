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
#include <string>
#include <vector>

#include "coopgrid/game.hpp"
#include "coopgrid/model.hpp"
#include "coopgrid/solver.hpp"

// Payoff allocation mechanisms for an energy coalition.  Five ex-post
// mechanisms redistribute the coalition's single bill while each member
// keeps its own consumption utility; the sixth (dynamic community pricing)
// is ex-ante: members face one flat internal price chosen so that their
// individual best responses replicate the jointly optimal schedule.

namespace coopgrid {

enum class Mechanism {
  EqualDivision,
  Egalitarian,
  Proportional,
  NetConsumption,
  Shapley,
  Dnem,
};

const char* mechanism_name(Mechanism mechanism);
Mechanism mechanism_from_name(const std::string& name);
// All six, in a stable order (useful for iterating experiments).
std::span<const Mechanism> all_mechanisms();

// Everything the ex-post mechanisms need about one coalition under one
// scheme: the realized per-member schedules (d_i, z_i), the utilities
// evaluated at those schedules, the pooled bill, and the standalone
// surpluses used for rationality checks and proportional shares.
struct AllocationContext {
  Scheme scheme = Scheme::Decentralized;
  Prices prices;
  int hour = 0;
  std::vector<Prosumer> members;
  std::vector<MemberSchedule> schedules;  // realized (d, z) per member
  std::vector<double> utilities;          // U_i at the realized d
  std::vector<double> standalone;         // v({i}): standalone surplus
  std::vector<double> standalone_z;       // z_i of the standalone response
  double z_total = 0.0;                   // sum of realized z_i
  double coalition_payment = 0.0;         // payment(z_total)
  double welfare = 0.0;                   // sum U_i - coalition payment
};

// Solves the coalition under `scheme` (joint schedule, or standalone
// responses pooled only for billing) and collects the context above.
AllocationContext make_context(std::span<const Prosumer> members,
                               Scheme scheme, const Prices& prices, int hour);

struct Allocation {
  Mechanism mechanism = Mechanism::EqualDivision;
  Scheme scheme = Scheme::Decentralized;
  int hour = 0;
  std::vector<std::string> ids;   // member prosumer ids, context order
  std::vector<double> psi;        // payoff per member, context order
  bool efficient = false;         // sum(psi) equals the coalition welfare
  std::vector<std::string> ir_violations;  // ids with psi_i < v({i})
  // Set only when the proportional rule hit a degenerate denominator and
  // fell back to equal division.
  bool proportional_fallback = false;
};

// psi_i = U_i - payment(z_N) / |N|.
Allocation equal_division(const AllocationContext& ctx);

// Each member pays its own bill at the realized z_i plus an equal share
// of the pooling gain: psi_i = U_i - payment(z_i)
//                              - (payment(z_N) - sum_j payment(z_j)) / |N|.
// (Under joint scheduling z_i is the centrally scheduled value; the
// standalone z_i would be another defensible reading.)
Allocation egalitarian(const AllocationContext& ctx);

// Bill shares proportional to standalone surpluses:
//   psi_i = U_i - (W(i) / sum_j W(j)) * payment(z_N).
// Dividing by the sum of standalone surpluses makes the shares sum to one,
// so the rule is budget balanced.  With `coalition_welfare_denominator`
// the share divides by the coalition welfare instead — kept for
// comparison; it is generally not budget balanced.  A degenerate
// denominator (|.| < 1e-12) falls back to equal division and flags it.
Allocation proportional(const AllocationContext& ctx,
                        bool coalition_welfare_denominator = false);

// Everyone is billed at one rate picked by the sign of the pooled net:
// psi_i = U_i - pi_plus * z_i when z_N >= 0, else U_i - pi_minus * z_i.
Allocation net_consumption_rule(const AllocationContext& ctx);

// payment(z_S) for every sub-coalition mask under the context's scheme
// (index = coalition mask over ctx.members; entry 0 is 0).  Decentralized
// nets are additive in the standalone z_i; joint scheduling re-solves each
// sub-coalition.  Limited to 12 members.
std::vector<double> subcoalition_payments(const AllocationContext& ctx);

// Shapley redistribution of the coalition bill:
//   psi_i = U_i - sum_{S ni i} w(|S|) * (payment(z_S) - payment(z_S\i)),
// with w(s) = (n-s)!(s-1)!/n!.  Exact enumeration, limited to 12 members.
Allocation shapley(const AllocationContext& ctx);

// Flat community price chosen by comparing the coalition's renewables to
// its aggregate demand at the tariff rates:
//   retail when sum r < f(pi_plus), export rate when sum r > f(pi_minus),
//   otherwise the zero-net community price mu of the joint schedule,
// where f(p) = sum over members of the envelope-aware demand response
// at price p.
struct DnemPrice {
  double price = 0.0;
  double f_plus = 0.0;          // aggregate demand response at pi_plus
  double f_minus = 0.0;         // aggregate demand response at pi_minus
  double renewable_total = 0.0;
};
DnemPrice dnem_price(std::span<const Prosumer> members, const Prices& prices);

// Ex-ante allocation: every member best-responds to the flat DnemPrice
// as a two-sided tariff; psi_i = U_i(d_i) - price * z_i.  By construction
// the responses reproduce the jointly optimal aggregate net consumption
// (verified to 1e-6; a mismatch throws std::runtime_error) and the payoffs
// sum to the centralized coalition welfare.
Allocation dnem_allocation(std::span<const Prosumer> members,
                           const Prices& prices, int hour);

// Dispatch by mechanism.  The dynamic-pricing mechanism ignores
// ctx.scheme (it is defined by the jointly optimal schedule) and reports
// scheme = centralized.
Allocation allocate(const AllocationContext& ctx, Mechanism mechanism);

// {"mechanism", "scheme", "hour", "payoffs":[{"prosumer_id","psi"}],
//  "efficient", "ir_violations"} (+ "proportional_fallback" when set).
std::string allocation_to_json(const Allocation& allocation);

}  // namespace coopgrid
