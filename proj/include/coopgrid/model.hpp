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
#include <span>
#include <string>
#include <vector>

// Household billing and consumption primitives: two-part net-metering
// payments, quadratic consumption utilities with a satiation plateau, and
// the prosumer/tariff value types everything else operates on.
//
// Units: energy in kWh per billing period (one hour), prices in $/kWh,
// welfare in $.  All comparisons use absolute tolerances.

namespace coopgrid {

// Retail (import) and export (sell-back) rate for one billing period.
// Invariant: 0 <= export_rate <= retail.
struct Prices {
  double retail = 0.0;
  double export_rate = 0.0;
};

// Two-part net-metering payment for net consumption z:
//   payment(z) = pi_plus * max(z, 0) - pi_minus * max(-z, 0).
// Convex, piecewise linear, positively homogeneous and subadditive for
// pi_minus <= pi_plus.  Throws std::invalid_argument on non-finite inputs
// or pi_minus > pi_plus.
double payment(double z, double pi_plus, double pi_minus);
double payment(double z, const Prices& prices);

// Hourly time-of-use tariff: one retail/export pair per billing period.
class TouTariff {
 public:
  TouTariff(std::vector<double> retail, std::vector<double> export_rate);

  int hours() const { return static_cast<int>(retail_.size()); }
  Prices at(int hour) const;  // throws std::invalid_argument out of range
  const std::vector<double>& retail() const { return retail_; }
  const std::vector<double>& export_rate() const { return export_rate_; }

 private:
  std::vector<double> retail_;
  std::vector<double> export_rate_;
};

// One flexible load with quadratic utility
//   U(d) = alpha*d - beta*d^2/2        for 0 <= d <= alpha/beta,
//   U(d) = alpha^2/(2*beta)            beyond the satiation point,
// and consumption bounded to [d_min, d_max].
// Invariants: beta > 0, alpha >= 0, 0 <= d_min <= d_max, all finite.
struct QuadDevice {
  double alpha;
  double beta;
  double d_min;
  double d_max;

  QuadDevice(double alpha, double beta, double d_min, double d_max);
  double satiation() const { return alpha / beta; }
};

// Consumption utility of one device at consumption d (>= 0 required).
double utility(const QuadDevice& device, double d);

// Sum of device utilities for a consumption bundle (sizes must match).
double bundle_utility(std::span<const QuadDevice> devices,
                      std::span<const double> d);

// Calibrate a quadratic device from an observed operating point: at price
// baseline_price the household consumed baseline_consumption with the given
// (negative) own-price elasticity.  Yields beta = -price/(elasticity*d0),
// alpha = price + beta*d0, bounds [0, d_max_factor*d0].
QuadDevice calibrate_device(double baseline_price, double baseline_consumption,
                            double elasticity, double d_max_factor = 2.0);

// A prosumer for one billing period: flexible devices, behind-the-meter
// renewable supply r >= 0, and operating-envelope bounds on net consumption
// z = sum(d) - r with z_min <= 0 <= z_max.
// Feasibility invariants (checked): z_max >= sum(d_min) - r and
// z_min <= sum(d_max) - r, so the envelope slab intersects the device box.
struct Prosumer {
  std::string id;
  std::vector<QuadDevice> devices;
  double renewable;
  double z_min;
  double z_max;

  Prosumer(std::string id, std::vector<QuadDevice> devices, double renewable,
           double z_min, double z_max);
  double d_min_total() const;
  double d_max_total() const;
};

// Surplus of one prosumer at bundle d / net consumption z under the given
// prices: sum of device utilities minus payment(z).  Requires z to equal
// sum(d) - renewable within 1e-9 and matching bundle size.
double surplus(const Prosumer& prosumer, std::span<const double> d, double z,
               const Prices& prices);

// Coalitions over player indices {0, ..., n-1}, n <= kMaxPlayers, as bitmasks.
inline constexpr int kMaxPlayers = 20;

class Coalition {
 public:
  Coalition() = default;
  explicit Coalition(std::uint32_t mask) : mask_(mask) {}
  static Coalition grand(int num_players);        // throws if out of range
  static Coalition of(std::span<const int> members);

  std::uint32_t mask() const { return mask_; }
  bool empty() const { return mask_ == 0; }
  int size() const;
  bool contains(int player) const { return (mask_ >> player) & 1u; }
  Coalition with(int player) const;
  Coalition without(int player) const;
  std::vector<int> members() const;

  friend bool operator==(const Coalition&, const Coalition&) = default;

 private:
  std::uint32_t mask_ = 0;
};

// Per-member schedule: one consumption value per device plus the resulting
// net consumption z = sum(d) - renewable (held exactly).
struct MemberSchedule {
  std::vector<double> d;
  double z = 0.0;
};

// Result of a scheduling solve: per-member schedules, the marginal
// (community or internal) price mu that supports them, and the achieved
// welfare sum(U_i) - payment(sum z_i).
struct ScheduleResult {
  std::vector<MemberSchedule> members;
  double mu = 0.0;
  double welfare = 0.0;

  double net_total() const;
};

// Welfare of an explicit (d, z) point: sum of bundle utilities minus the
// payment on the aggregate net consumption.  Evaluates the objective as a
// function of the pair; no feasibility coupling between d and z is imposed.
double welfare_at(std::span<const Prosumer> members,
                  std::span<const std::vector<double>> d,
                  std::span<const double> z, const Prices& prices);

}  // namespace coopgrid
