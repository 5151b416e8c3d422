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

// Surplus-maximizing schedules under two-part net metering.
//
// Both the standalone best response and the coalition-level centralized
// schedule reduce to the same threshold structure: net consumption is
// priced at retail when the (aggregate) demand at the retail rate still
// imports, at the export rate when the demand at the export rate still
// exports, and otherwise a marginal price mu between the two rates clears
// net consumption to zero.  Demand at a price is piecewise linear and
// non-increasing, so the clearing price is found by bisection.
//
// Operating envelopes bind per member: a member whose net consumption hits
// z_min/z_max stops responding to the community price and its z is pinned,
// with an internal marginal price distributing the pinned total across its
// devices.  When a pinned total exceeds even satiated demand, devices are
// filled to satiation and the remainder is assigned in device-index order
// (utility is flat there; welfare, z and mu do not depend on the split).

namespace coopgrid {

// Bisection controls shared by every threshold solve: stop when the price
// bracket is narrower than kPriceTol or the residual is below kResidualTol;
// exceeding kMaxIterations is a hard error (unreachable for valid inputs).
inline constexpr double kPriceTol = 1e-10;
inline constexpr double kResidualTol = 1e-12;
inline constexpr int kMaxIterations = 200;

enum class Regime {
  Import,
  ZeroNet,
  Export,
  EnvelopeClampedImport,
  EnvelopeClampedExport,
};

const char* regime_name(Regime regime);

// A solved schedule together with the regime that produced it.  For
// coalition solves the regime refers to the aggregate; mu lies in
// [export, retail] except for envelope-clamped standalone solves, where it
// is the internal price supporting the pinned total.
struct RegimeSolution {
  Regime regime;
  double mu = 0.0;
  ScheduleResult schedule;
};

// Total box-clamped demand sum_k clamp((alpha_k - mu)/beta_k, d_min, d_max)
// at marginal price mu >= 0.  Continuous and non-increasing in mu.
double aggregate_demand(std::span<const QuadDevice> devices, double mu);

// One member's surplus-maximizing reaction to a flat marginal price mu >= 0,
// honoring device boxes and the operating envelope.
struct MemberResponse {
  std::vector<double> d;
  double z = 0.0;       // exactly sum(d) - renewable; pinned exactly when clamped
  double mu = 0.0;      // internal price supporting d (== input when unclamped)
  bool clamped_low = false;
  bool clamped_high = false;
};

MemberResponse respond_to_price(const Prosumer& prosumer, double mu);

// Envelope-clamped net consumption clamp(D_i(mu) - r_i, z_min, z_max):
// the cheap evaluation used inside coalition bisections.
double clamped_net(const Prosumer& prosumer, double mu);

// Standalone optimum under the two-part tariff.
RegimeSolution best_response(const Prosumer& prosumer, const Prices& prices);

// Welfare-maximizing coalition schedule with the payment charged on the
// aggregate net consumption.  Members react to a single community price;
// regime classification uses the aggregate clamped net at the two rates,
// with exact zero at the retail (resp. export) rate classified as zero-net
// at mu = retail (resp. export).  Throws std::invalid_argument on an empty
// member list.
RegimeSolution centralized_schedule(std::span<const Prosumer> members,
                                    const Prices& prices);

}  // namespace coopgrid
