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

#include "coopgrid/alloc.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "coopgrid/util.hpp"
#include "json.hpp"

namespace coopgrid {

namespace {

constexpr double kDegenerate = 1e-12;

void check_nonempty(const AllocationContext& ctx) {
  if (ctx.members.empty())
    throw std::invalid_argument("allocation: empty coalition");
}

// Fills ids/efficiency/rationality fields shared by every mechanism.
Allocation finalize(const AllocationContext& ctx, Mechanism mechanism,
                    std::vector<double> psi) {
  Allocation a;
  a.mechanism = mechanism;
  a.scheme = ctx.scheme;
  a.hour = ctx.hour;
  a.psi = std::move(psi);
  double total = 0.0;
  for (std::size_t i = 0; i < ctx.members.size(); ++i) {
    a.ids.push_back(ctx.members[i].id);
    total += a.psi[i];
    if (a.psi[i] < ctx.standalone[i] - kGameTol)
      a.ir_violations.push_back(ctx.members[i].id);
  }
  a.efficient = std::abs(total - ctx.welfare) <= kGameTol;
  return a;
}

}  // namespace

const char* mechanism_name(Mechanism mechanism) {
  switch (mechanism) {
    case Mechanism::EqualDivision: return "equal_division";
    case Mechanism::Egalitarian: return "egalitarian";
    case Mechanism::Proportional: return "proportional";
    case Mechanism::NetConsumption: return "net_consumption";
    case Mechanism::Shapley: return "shapley";
    case Mechanism::Dnem: return "dnem";
  }
  throw std::invalid_argument("unknown mechanism");
}

Mechanism mechanism_from_name(const std::string& name) {
  for (Mechanism m : all_mechanisms())
    if (name == mechanism_name(m)) return m;
  throw std::invalid_argument("unknown mechanism: " + name);
}

std::span<const Mechanism> all_mechanisms() {
  static constexpr std::array<Mechanism, 6> kAll = {
      Mechanism::EqualDivision,  Mechanism::Egalitarian,
      Mechanism::Proportional,   Mechanism::NetConsumption,
      Mechanism::Shapley,        Mechanism::Dnem,
  };
  return kAll;
}

AllocationContext make_context(std::span<const Prosumer> members,
                               Scheme scheme, const Prices& prices,
                               int hour) {
  if (members.empty())
    throw std::invalid_argument("make_context: empty coalition");
  AllocationContext ctx;
  ctx.scheme = scheme;
  ctx.prices = prices;
  ctx.hour = hour;
  ctx.members.assign(members.begin(), members.end());

  for (const auto& member : members) {
    const RegimeSolution solo = best_response(member, prices);
    ctx.standalone.push_back(solo.schedule.welfare);
    ctx.standalone_z.push_back(solo.schedule.members.at(0).z);
    if (scheme == Scheme::Decentralized)
      ctx.schedules.push_back(solo.schedule.members.at(0));
  }
  if (scheme == Scheme::Centralized)
    ctx.schedules = centralized_schedule(members, prices).schedule.members;

  double utility_sum = 0.0;
  for (std::size_t i = 0; i < ctx.members.size(); ++i) {
    const double u =
        bundle_utility(ctx.members[i].devices, ctx.schedules[i].d);
    ctx.utilities.push_back(u);
    utility_sum += u;
    ctx.z_total += ctx.schedules[i].z;
  }
  ctx.coalition_payment = payment(ctx.z_total, prices);
  ctx.welfare = utility_sum - ctx.coalition_payment;
  return ctx;
}

Allocation equal_division(const AllocationContext& ctx) {
  check_nonempty(ctx);
  const double share = ctx.coalition_payment /
                       static_cast<double>(ctx.members.size());
  std::vector<double> psi;
  for (std::size_t i = 0; i < ctx.members.size(); ++i)
    psi.push_back(ctx.utilities[i] - share);
  return finalize(ctx, Mechanism::EqualDivision, std::move(psi));
}

Allocation egalitarian(const AllocationContext& ctx) {
  check_nonempty(ctx);
  double own_bills = 0.0;
  for (const auto& sched : ctx.schedules)
    own_bills += payment(sched.z, ctx.prices);
  const double savings_share = (ctx.coalition_payment - own_bills) /
                               static_cast<double>(ctx.members.size());
  std::vector<double> psi;
  for (std::size_t i = 0; i < ctx.members.size(); ++i)
    psi.push_back(ctx.utilities[i] -
                  (payment(ctx.schedules[i].z, ctx.prices) + savings_share));
  return finalize(ctx, Mechanism::Egalitarian, std::move(psi));
}

Allocation proportional(const AllocationContext& ctx,
                        bool coalition_welfare_denominator) {
  check_nonempty(ctx);
  double denominator = 0.0;
  if (coalition_welfare_denominator) {
    denominator = ctx.welfare;
  } else {
    for (double w : ctx.standalone) denominator += w;
  }
  if (std::abs(denominator) < kDegenerate) {
    Allocation fallback = equal_division(ctx);
    fallback.mechanism = Mechanism::Proportional;
    fallback.proportional_fallback = true;
    return fallback;
  }
  std::vector<double> psi;
  for (std::size_t i = 0; i < ctx.members.size(); ++i)
    psi.push_back(ctx.utilities[i] - (ctx.standalone[i] / denominator) *
                                         ctx.coalition_payment);
  return finalize(ctx, Mechanism::Proportional, std::move(psi));
}

Allocation net_consumption_rule(const AllocationContext& ctx) {
  check_nonempty(ctx);
  // The z_N = 0 boundary is billed at retail; the shares still sum to
  // payment(0) = 0 because the z_i themselves sum to zero.
  const double rate = ctx.z_total >= 0.0 ? ctx.prices.retail
                                         : ctx.prices.export_rate;
  std::vector<double> psi;
  for (std::size_t i = 0; i < ctx.members.size(); ++i)
    psi.push_back(ctx.utilities[i] - rate * ctx.schedules[i].z);
  return finalize(ctx, Mechanism::NetConsumption, std::move(psi));
}

std::vector<double> subcoalition_payments(const AllocationContext& ctx) {
  check_nonempty(ctx);
  const int n = static_cast<int>(ctx.members.size());
  if (n > 12)
    throw std::invalid_argument(
        "subcoalition_payments: limited to 12 members");
  const std::uint32_t grand = (1u << n) - 1u;
  std::vector<double> pay(std::size_t{grand} + 1, 0.0);
  if (ctx.scheme == Scheme::Decentralized) {
    for (std::uint32_t mask = 1; mask <= grand; ++mask) {
      double z = 0.0;
      for (int i = 0; i < n; ++i)
        if ((mask >> i) & 1u) z += ctx.standalone_z[static_cast<std::size_t>(i)];
      pay[mask] = payment(z, ctx.prices);
    }
  } else {
    const int threads = thread_cap();
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(threads)
#endif
    for (std::int64_t mask = 1; mask <= static_cast<std::int64_t>(grand);
         ++mask) {
      std::vector<Prosumer> sub;
      for (int i = 0; i < n; ++i)
        if ((mask >> i) & 1)
          sub.push_back(ctx.members[static_cast<std::size_t>(i)]);
      const auto solved = centralized_schedule(sub, ctx.prices);
      pay[static_cast<std::size_t>(mask)] =
          payment(solved.schedule.net_total(), ctx.prices);
    }
    (void)threads;
  }
  return pay;
}

Allocation shapley(const AllocationContext& ctx) {
  check_nonempty(ctx);
  const int n = static_cast<int>(ctx.members.size());
  if (n > 12)
    throw std::invalid_argument("shapley: limited to 12 members");
  const std::vector<double> pay = subcoalition_payments(ctx);

  // w(s) = (n-s)!(s-1)!/n! built iteratively to stay in double range.
  std::vector<double> weight(static_cast<std::size_t>(n) + 1, 0.0);
  for (int s = 1; s <= n; ++s) {
    double w = 1.0 / static_cast<double>(n);
    for (int k = 1; k < s; ++k)
      w *= static_cast<double>(k) / static_cast<double>(n - k);
    weight[static_cast<std::size_t>(s)] = w;
  }

  std::vector<double> psi(static_cast<std::size_t>(n), 0.0);
  const std::uint32_t grand = (1u << n) - 1u;
  for (std::uint32_t mask = 1; mask <= grand; ++mask) {
    const double w = weight[static_cast<std::size_t>(
        std::popcount(mask))];
    for (int i = 0; i < n; ++i) {
      if (!((mask >> i) & 1u)) continue;
      const double marginal = pay[mask] - pay[mask ^ (1u << i)];
      psi[static_cast<std::size_t>(i)] -= w * marginal;
    }
  }
  for (int i = 0; i < n; ++i)
    psi[static_cast<std::size_t>(i)] += ctx.utilities[static_cast<std::size_t>(i)];
  return finalize(ctx, Mechanism::Shapley, std::move(psi));
}

DnemPrice dnem_price(std::span<const Prosumer> members,
                     const Prices& prices) {
  if (members.empty())
    throw std::invalid_argument("dnem_price: empty coalition");
  DnemPrice out;
  for (const auto& member : members) {
    out.renewable_total += member.renewable;
    for (double d : respond_to_price(member, prices.retail).d)
      out.f_plus += d;
    for (double d : respond_to_price(member, prices.export_rate).d)
      out.f_minus += d;
  }
  if (out.renewable_total < out.f_plus) {
    out.price = prices.retail;       // scarce renewables: import regime
  } else if (out.renewable_total > out.f_minus) {
    out.price = prices.export_rate;  // abundant renewables: export regime
  } else {
    out.price = centralized_schedule(members, prices).schedule.mu;
  }
  return out;
}

Allocation dnem_allocation(std::span<const Prosumer> members,
                           const Prices& prices, int hour) {
  if (members.empty())
    throw std::invalid_argument("dnem_allocation: empty coalition");
  const DnemPrice flat = dnem_price(members, prices);
  const Prices flat_tariff{flat.price, flat.price};

  AllocationContext ctx;
  ctx.scheme = Scheme::Centralized;
  ctx.prices = prices;
  ctx.hour = hour;
  ctx.members.assign(members.begin(), members.end());

  std::vector<double> psi;
  double utility_sum = 0.0;
  double net_total = 0.0;
  for (const auto& member : members) {
    ctx.standalone.push_back(best_response(member, prices).schedule.welfare);
    const MemberSchedule response =
        best_response(member, flat_tariff).schedule.members.at(0);
    const double u = bundle_utility(member.devices, response.d);
    psi.push_back(u - flat.price * response.z);
    utility_sum += u;
    net_total += response.z;
    ctx.schedules.push_back(response);
    ctx.standalone_z.push_back(response.z);
  }

  const RegimeSolution joint = centralized_schedule(members, prices);
  if (std::abs(net_total - joint.schedule.net_total()) > 1e-6)
    throw std::runtime_error(
        "dnem_allocation: flat-price responses missed the joint optimum");
  ctx.z_total = net_total;
  ctx.coalition_payment = payment(net_total, prices);
  // Payoffs sum to the jointly optimal welfare; judge efficiency there.
  ctx.welfare = joint.schedule.welfare;
  return finalize(ctx, Mechanism::Dnem, std::move(psi));
}

Allocation allocate(const AllocationContext& ctx, Mechanism mechanism) {
  switch (mechanism) {
    case Mechanism::EqualDivision: return equal_division(ctx);
    case Mechanism::Egalitarian: return egalitarian(ctx);
    case Mechanism::Proportional: return proportional(ctx);
    case Mechanism::NetConsumption: return net_consumption_rule(ctx);
    case Mechanism::Shapley: return shapley(ctx);
    case Mechanism::Dnem:
      return dnem_allocation(ctx.members, ctx.prices, ctx.hour);
  }
  throw std::invalid_argument("unknown mechanism");
}

std::string allocation_to_json(const Allocation& allocation) {
  nlohmann::json doc;
  doc["mechanism"] = mechanism_name(allocation.mechanism);
  doc["scheme"] = scheme_name(allocation.scheme);
  doc["hour"] = allocation.hour;
  auto& payoffs = doc["payoffs"];
  payoffs = nlohmann::json::array();
  for (std::size_t i = 0; i < allocation.psi.size(); ++i)
    payoffs.push_back({{"prosumer_id", allocation.ids[i]},
                       {"psi", allocation.psi[i]}});
  doc["efficient"] = allocation.efficient;
  doc["ir_violations"] = allocation.ir_violations;
  if (allocation.proportional_fallback) doc["proportional_fallback"] = true;
  return doc.dump(2);
}

}  // namespace coopgrid
