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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <string>
#include <vector>

#include "coopgrid/alloc.hpp"
#include "coopgrid/game.hpp"
#include "coopgrid/util.hpp"
#include "json.hpp"
#include "test_support.hpp"

using namespace coopgrid;
using namespace coopgrid::testing;

namespace {

double total(std::span<const double> psi) {
  double sum = 0.0;
  for (double v : psi) sum += v;
  return sum;
}

}  // namespace

TEST_CASE("mechanism names round-trip in a stable order") {
  auto all = all_mechanisms();
  REQUIRE(all.size() == 6);
  const char* expected[] = {"equal_division", "egalitarian",   "proportional",
                            "net_consumption", "shapley",      "dnem"};
  for (std::size_t i = 0; i < all.size(); ++i) {
    CHECK(std::string(mechanism_name(all[i])) == expected[i]);
    CHECK(mechanism_from_name(expected[i]) == all[i]);
  }
  CHECK_THROWS_AS(mechanism_from_name("nope"), std::invalid_argument);
}

TEST_CASE("context assembly matches the underlying solves") {
  const auto members = worked_example();
  const Prices prices = worked_prices();

  auto dec = make_context(members, Scheme::Decentralized, prices, 0);
  REQUIRE(dec.members.size() == 2);
  CHECK(dec.schedules[0].z == doctest::Approx(1.2));
  CHECK(dec.schedules[1].z == doctest::Approx(-1.4));
  CHECK(dec.standalone[0] == doctest::Approx(0.36));
  CHECK(dec.standalone[1] == doctest::Approx(1.24));
  CHECK(dec.standalone_z[0] == doctest::Approx(1.2));
  CHECK(dec.standalone_z[1] == doctest::Approx(-1.4));
  CHECK(dec.z_total == doctest::Approx(-0.2));
  CHECK(dec.coalition_payment == doctest::Approx(-0.04));
  CHECK(dec.welfare == doctest::Approx(1.84).epsilon(1e-9));
  CHECK(dec.utilities[0] == doctest::Approx(0.84));
  CHECK(dec.utilities[1] == doctest::Approx(0.96));

  auto cen = make_context(members, Scheme::Centralized, prices, 0);
  CHECK(cen.welfare == doctest::Approx(1.875).epsilon(1e-9));
  CHECK(cen.schedules[0].z == doctest::Approx(1.5).epsilon(1e-9));
  CHECK(cen.schedules[1].z == doctest::Approx(-1.5).epsilon(1e-9));
  // Standalone references do not depend on the scheme.
  CHECK(cen.standalone[0] == doctest::Approx(0.36));
  CHECK(cen.standalone[1] == doctest::Approx(1.24));
}

TEST_CASE("equal division on the pooled bill") {
  auto ctx = make_context(worked_example(), Scheme::Decentralized,
                          worked_prices(), 0);
  auto a = equal_division(ctx);
  CHECK(a.mechanism == Mechanism::EqualDivision);
  REQUIRE(a.psi.size() == 2);
  CHECK(a.psi[0] == doctest::Approx(0.86).epsilon(1e-9));
  CHECK(a.psi[1] == doctest::Approx(0.98).epsilon(1e-9));
  CHECK(a.efficient);
  // B would earn 1.24 alone; 0.98 is not individually rational.
  REQUIRE(a.ir_violations.size() == 1);
  CHECK(a.ir_violations[0] == ctx.members[1].id);
}

TEST_CASE("egalitarian surplus sharing") {
  auto ctx = make_context(worked_example(), Scheme::Decentralized,
                          worked_prices(), 0);
  auto a = egalitarian(ctx);
  CHECK(a.psi[0] == doctest::Approx(0.48).epsilon(1e-9));
  CHECK(a.psi[1] == doctest::Approx(1.36).epsilon(1e-9));
  CHECK(a.efficient);
  CHECK(a.ir_violations.empty());
}

TEST_CASE("proportional bill shares") {
  auto ctx = make_context(worked_example(), Scheme::Decentralized,
                          worked_prices(), 0);
  auto a = proportional(ctx);
  CHECK_FALSE(a.proportional_fallback);
  // Shares 0.36/1.6 and 1.24/1.6 of the -0.04 bill.
  CHECK(a.psi[0] == doctest::Approx(0.849).epsilon(1e-9));
  CHECK(a.psi[1] == doctest::Approx(0.991).epsilon(1e-9));
  CHECK(a.efficient);
  REQUIRE(a.ir_violations.size() == 1);
  CHECK(a.ir_violations[0] == ctx.members[1].id);

  // Dividing by the coalition welfare instead leaks value: the shares no
  // longer sum to one, so the line items miss the actual bill.
  auto variant = proportional(ctx, true);
  CHECK_FALSE(variant.efficient);
  CHECK(total(variant.psi) != doctest::Approx(ctx.welfare).epsilon(1e-9));
}

TEST_CASE("proportional falls back to equal division on a zero denominator") {
  // Both members are priced out entirely: alpha below the export rate means
  // zero demand and zero standalone surplus.
  std::vector<Prosumer> members;
  members.emplace_back("x0", std::vector<QuadDevice>{QuadDevice{0.1, 1.0, 0.0, 1.0}},
                       0.0, -1.0, 1.0);
  members.emplace_back("x1", std::vector<QuadDevice>{QuadDevice{0.15, 1.0, 0.0, 1.0}},
                       0.0, -1.0, 1.0);
  auto ctx = make_context(members, Scheme::Decentralized, Prices{0.4, 0.2}, 0);
  REQUIRE(ctx.standalone[0] == doctest::Approx(0.0));
  REQUIRE(ctx.standalone[1] == doctest::Approx(0.0));
  auto a = proportional(ctx);
  CHECK(a.mechanism == Mechanism::Proportional);
  CHECK(a.proportional_fallback);
  auto eq = equal_division(ctx);
  for (std::size_t i = 0; i < a.psi.size(); ++i) {
    CHECK(a.psi[i] == doctest::Approx(eq.psi[i]).epsilon(1e-12));
  }
}

TEST_CASE("net-consumption billing at the pooled-sign rate") {
  auto ctx = make_context(worked_example(), Scheme::Decentralized,
                          worked_prices(), 0);
  // Pooled net is -0.2, so everyone settles at the export rate.
  auto a = net_consumption_rule(ctx);
  CHECK(a.psi[0] == doctest::Approx(0.60).epsilon(1e-9));
  CHECK(a.psi[1] == doctest::Approx(1.24).epsilon(1e-9));
  CHECK(a.efficient);
  CHECK(a.ir_violations.empty());
}

TEST_CASE("sub-coalition bills under both schemes") {
  auto ctx = make_context(worked_example(), Scheme::Decentralized,
                          worked_prices(), 0);
  auto bills = subcoalition_payments(ctx);
  REQUIRE(bills.size() == 4);
  CHECK(bills[0] == 0.0);
  CHECK(bills[0b01] == doctest::Approx(0.48));   // A imports 1.2 at 0.4
  CHECK(bills[0b10] == doctest::Approx(-0.28));  // B exports 1.4 at 0.2
  CHECK(bills[0b11] == doctest::Approx(-0.04));

  auto cen = make_context(worked_example(), Scheme::Centralized,
                          worked_prices(), 0);
  auto cen_bills = subcoalition_payments(cen);
  // Jointly scheduled pairs net to zero; singletons match their solo bills.
  CHECK(cen_bills[0b01] == doctest::Approx(0.48).epsilon(1e-9));
  CHECK(cen_bills[0b10] == doctest::Approx(-0.28).epsilon(1e-9));
  CHECK(std::abs(cen_bills[0b11]) <= 1e-9);
}

TEST_CASE("bill-share Shapley value on the worked example") {
  auto ctx = make_context(worked_example(), Scheme::Decentralized,
                          worked_prices(), 0);
  auto a = shapley(ctx);
  CHECK(a.psi[0] == doctest::Approx(0.48).epsilon(1e-9));
  CHECK(a.psi[1] == doctest::Approx(1.36).epsilon(1e-9));
  CHECK(a.efficient);
  CHECK(a.ir_violations.empty());
}

TEST_CASE("Shapley symmetry and dummy axioms") {
  // Two copies of the same prosumer must earn identical payoffs.
  QuadDevice dev{1.0, 0.5, 0.0, 10.0};
  std::vector<Prosumer> twins;
  twins.emplace_back("t0", std::vector<QuadDevice>{dev}, 1.0, -6.0, 6.0);
  twins.emplace_back("t1", std::vector<QuadDevice>{dev}, 1.0, -6.0, 6.0);
  auto ctx = make_context(twins, Scheme::Decentralized, Prices{0.4, 0.2}, 0);
  auto a = shapley(ctx);
  CHECK(a.psi[0] == doctest::Approx(a.psi[1]).epsilon(1e-12));

  // A member whose standalone net is exactly zero never moves any
  // sub-coalition's bill, so it keeps exactly its own utility.
  std::vector<Prosumer> mixed;
  mixed.emplace_back("active", std::vector<QuadDevice>{dev}, 0.0, -6.0, 6.0);
  // At retail 0.5 the dummy's demand is (1 - 0.5)/0.5 = 1 = its renewable.
  mixed.emplace_back("dummy", std::vector<QuadDevice>{dev}, 1.0, -6.0, 6.0);
  auto ctx2 = make_context(mixed, Scheme::Decentralized, Prices{0.5, 0.2}, 0);
  REQUIRE(ctx2.schedules[1].z == 0.0);
  auto a2 = shapley(ctx2);
  CHECK(a2.psi[1] == doctest::Approx(ctx2.utilities[1]).epsilon(1e-12));
  CHECK(a2.psi[1] == doctest::Approx(ctx2.standalone[1]).epsilon(1e-12));
}

TEST_CASE("flat community price on the worked example") {
  const auto members = worked_example();
  const Prices prices = worked_prices();
  auto dp = dnem_price(members, prices);
  CHECK(dp.f_plus == doctest::Approx(2.4));
  CHECK(dp.f_minus == doctest::Approx(3.2));
  CHECK(dp.renewable_total == doctest::Approx(3.0));
  // 2.4 < 3 < 3.2: the community clears internally at the zero-net price.
  CHECK(dp.price == doctest::Approx(0.25).epsilon(1e-9));

  auto a = dnem_allocation(members, prices, 0);
  CHECK(a.mechanism == Mechanism::Dnem);
  CHECK(a.scheme == Scheme::Centralized);
  CHECK(a.psi[0] == doctest::Approx(0.5625).epsilon(1e-9));
  CHECK(a.psi[1] == doctest::Approx(1.3125).epsilon(1e-9));
  CHECK(total(a.psi) == doctest::Approx(1.875).epsilon(1e-9));
  CHECK(a.efficient);
  CHECK(a.ir_violations.empty());
}

TEST_CASE("flat price degenerates to the tariff rates at the boundary") {
  QuadDevice dev{1.0, 0.5, 0.0, 10.0};
  const Prices prices{0.4, 0.2};

  SUBCASE("no renewables: everyone imports at retail") {
    std::vector<Prosumer> members;
    members.emplace_back("i0", std::vector<QuadDevice>{dev}, 0.0, -6.0, 6.0);
    members.emplace_back("i1", std::vector<QuadDevice>{dev}, 0.0, -6.0, 6.0);
    auto dp = dnem_price(members, prices);
    CHECK(dp.price == prices.retail);
    auto a = dnem_allocation(members, prices, 0);
    // Retail-price best responses are exactly the standalone optima.
    for (std::size_t i = 0; i < members.size(); ++i) {
      CHECK(a.psi[i] ==
            doctest::Approx(best_response(members[i], prices).schedule.welfare)
                .epsilon(1e-12));
    }
  }

  SUBCASE("renewable glut: everyone exports at the export rate") {
    std::vector<Prosumer> members;
    members.emplace_back("e0", std::vector<QuadDevice>{dev}, 5.0, -6.0, 6.0);
    members.emplace_back("e1", std::vector<QuadDevice>{dev}, 5.0, -6.0, 6.0);
    auto dp = dnem_price(members, prices);
    CHECK(dp.price == prices.export_rate);
    auto a = dnem_allocation(members, prices, 0);
    for (std::size_t i = 0; i < members.size(); ++i) {
      CHECK(a.psi[i] ==
            doctest::Approx(best_response(members[i], prices).schedule.welfare)
                .epsilon(1e-12));
    }
  }

  SUBCASE("singleton community") {
    std::vector<Prosumer> members;
    members.emplace_back("solo", std::vector<QuadDevice>{dev}, 3.0, -6.0, 6.0);
    auto a = dnem_allocation(members, prices, 0);
    CHECK(a.psi[0] ==
          doctest::Approx(best_response(members[0], prices).schedule.welfare)
              .epsilon(1e-9));
  }
}

TEST_CASE("every mechanism is budget balanced for its scheme") {
  Rng rng(2222);
  for (int trial = 0; trial < 6; ++trial) {
    const Prices prices = random_prices(rng);
    const int n = 2 + static_cast<int>(rng.below(4));
    const auto community = random_community(rng, n, 2);
    for (Scheme scheme : {Scheme::Decentralized, Scheme::Centralized}) {
      auto ctx = make_context(community, scheme, prices, 0);
      for (Mechanism m : all_mechanisms()) {
        auto a = allocate(ctx, m);
        CHECK(a.efficient);
        if (m == Mechanism::Dnem) {
          // Defined off the joint schedule regardless of the context scheme.
          auto cen = make_context(community, Scheme::Centralized, prices, 0);
          CHECK(total(a.psi) == doctest::Approx(cen.welfare).epsilon(1e-8));
        } else {
          CHECK(total(a.psi) == doctest::Approx(ctx.welfare).epsilon(1e-8));
        }
      }
    }
  }
}

TEST_CASE("dynamic pricing is individually rational on random communities") {
  Rng rng(959);
  for (int trial = 0; trial < 10; ++trial) {
    const Prices prices = random_prices(rng);
    const int n = 2 + static_cast<int>(rng.below(5));
    const auto community = random_community(rng, n, 2);
    auto a = dnem_allocation(community, prices, 0);
    CHECK(a.ir_violations.empty());
  }
}

TEST_CASE("net-consumption payoffs sit in the core of the pooled-bill game") {
  Rng rng(47000);
  for (int trial = 0; trial < 6; ++trial) {
    const Prices prices = random_prices(rng);
    const int n = 2 + static_cast<int>(rng.below(5));
    const auto community = random_community(rng, n, 2);
    auto ctx = make_context(community, Scheme::Decentralized, prices, 0);
    auto a = net_consumption_rule(ctx);
    auto table = build_table(community, Scheme::Decentralized, prices, 0);
    CHECK(in_core(a.psi, table, 1e-7).ok);
  }
}

TEST_CASE("allocations serialize with ids, payoffs and diagnostics") {
  auto ctx = make_context(worked_example(), Scheme::Decentralized,
                          worked_prices(), 0);
  auto a = equal_division(ctx);
  auto doc = nlohmann::json::parse(allocation_to_json(a));
  CHECK(doc["mechanism"] == "equal_division");
  CHECK(doc["scheme"] == "decentralized");
  CHECK(doc["hour"] == 0);
  REQUIRE(doc["payoffs"].size() == 2);
  CHECK(doc["payoffs"][0]["prosumer_id"] == "A");
  CHECK(doc["payoffs"][0]["psi"].get<double>() == doctest::Approx(0.86));
  CHECK(doc["efficient"].get<bool>());
  REQUIRE(doc["ir_violations"].size() == 1);
  CHECK(doc["ir_violations"][0] == "B");
  CHECK_FALSE(doc.contains("proportional_fallback"));
}
