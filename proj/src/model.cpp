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

#include "coopgrid/model.hpp"

#include <bit>
#include <cmath>
#include <stdexcept>
#include <utility>

namespace coopgrid {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}

bool finite(double x) { return std::isfinite(x); }

}  // namespace

double payment(double z, double pi_plus, double pi_minus) {
  require(finite(z) && finite(pi_plus) && finite(pi_minus),
          "payment: non-finite input");
  require(pi_minus <= pi_plus, "payment: export rate exceeds retail rate");
  if (z >= 0.0) return pi_plus * z;
  return pi_minus * z;
}

double payment(double z, const Prices& prices) {
  return payment(z, prices.retail, prices.export_rate);
}

TouTariff::TouTariff(std::vector<double> retail, std::vector<double> export_rate)
    : retail_(std::move(retail)), export_rate_(std::move(export_rate)) {
  require(!retail_.empty(), "TouTariff: empty horizon");
  require(retail_.size() == export_rate_.size(),
          "TouTariff: retail/export length mismatch");
  for (std::size_t h = 0; h < retail_.size(); ++h) {
    require(finite(retail_[h]) && finite(export_rate_[h]),
            "TouTariff: non-finite rate");
    require(export_rate_[h] >= 0.0 && export_rate_[h] <= retail_[h],
            "TouTariff: requires 0 <= export <= retail per hour");
  }
}

Prices TouTariff::at(int hour) const {
  require(hour >= 0 && hour < hours(), "TouTariff: hour out of range");
  return {retail_[static_cast<std::size_t>(hour)],
          export_rate_[static_cast<std::size_t>(hour)]};
}

QuadDevice::QuadDevice(double alpha, double beta, double d_min, double d_max)
    : alpha(alpha), beta(beta), d_min(d_min), d_max(d_max) {
  require(finite(alpha) && finite(beta) && finite(d_min) && finite(d_max),
          "QuadDevice: non-finite parameter");
  require(beta > 0.0, "QuadDevice: requires beta > 0");
  require(alpha >= 0.0, "QuadDevice: requires alpha >= 0");
  require(0.0 <= d_min && d_min <= d_max,
          "QuadDevice: requires 0 <= d_min <= d_max");
}

double utility(const QuadDevice& device, double d) {
  require(finite(d), "utility: non-finite consumption");
  require(d >= 0.0, "utility: negative consumption");
  const double sat = device.satiation();
  if (d >= sat) return device.alpha * sat - 0.5 * device.beta * sat * sat;
  return device.alpha * d - 0.5 * device.beta * d * d;
}

double bundle_utility(std::span<const QuadDevice> devices,
                      std::span<const double> d) {
  require(devices.size() == d.size(), "bundle_utility: size mismatch");
  double total = 0.0;
  for (std::size_t k = 0; k < devices.size(); ++k) total += utility(devices[k], d[k]);
  return total;
}

QuadDevice calibrate_device(double baseline_price, double baseline_consumption,
                            double elasticity, double d_max_factor) {
  require(finite(baseline_price) && finite(baseline_consumption) &&
              finite(elasticity) && finite(d_max_factor),
          "calibrate_device: non-finite input");
  require(baseline_price > 0.0, "calibrate_device: requires baseline price > 0");
  require(baseline_consumption > 0.0,
          "calibrate_device: requires baseline consumption > 0");
  require(elasticity < 0.0, "calibrate_device: requires elasticity < 0");
  require(d_max_factor >= 1.0, "calibrate_device: requires d_max_factor >= 1");
  const double beta = -baseline_price / (elasticity * baseline_consumption);
  const double alpha = baseline_price + beta * baseline_consumption;
  return QuadDevice(alpha, beta, 0.0, d_max_factor * baseline_consumption);
}

Prosumer::Prosumer(std::string id, std::vector<QuadDevice> devices,
                   double renewable, double z_min, double z_max)
    : id(std::move(id)),
      devices(std::move(devices)),
      renewable(renewable),
      z_min(z_min),
      z_max(z_max) {
  require(finite(renewable) && finite(z_min) && finite(z_max),
          "Prosumer: non-finite parameter");
  require(renewable >= 0.0, "Prosumer: negative renewable supply");
  require(z_min <= 0.0 && 0.0 <= z_max, "Prosumer: requires z_min <= 0 <= z_max");
  require(z_max >= d_min_total() - renewable,
          "Prosumer: envelope infeasible (z_max < sum d_min - r)");
  require(z_min <= d_max_total() - renewable,
          "Prosumer: envelope infeasible (z_min > sum d_max - r)");
}

double Prosumer::d_min_total() const {
  double s = 0.0;
  for (const auto& dev : devices) s += dev.d_min;
  return s;
}

double Prosumer::d_max_total() const {
  double s = 0.0;
  for (const auto& dev : devices) s += dev.d_max;
  return s;
}

double surplus(const Prosumer& prosumer, std::span<const double> d, double z,
               const Prices& prices) {
  require(d.size() == prosumer.devices.size(), "surplus: bundle size mismatch");
  double total_d = 0.0;
  for (double v : d) total_d += v;
  require(std::abs(total_d - prosumer.renewable - z) <= 1e-9,
          "surplus: inconsistent (d, z, r)");
  return bundle_utility(prosumer.devices, d) - payment(z, prices);
}

Coalition Coalition::grand(int num_players) {
  if (num_players < 1 || num_players > kMaxPlayers)
    throw std::invalid_argument("Coalition: player count out of range");
  return Coalition((num_players == 32) ? ~0u : ((1u << num_players) - 1u));
}

Coalition Coalition::of(std::span<const int> members) {
  std::uint32_t mask = 0;
  for (int m : members) {
    if (m < 0 || m >= kMaxPlayers)
      throw std::invalid_argument("Coalition: member index out of range");
    mask |= (1u << m);
  }
  return Coalition(mask);
}

int Coalition::size() const { return std::popcount(mask_); }

Coalition Coalition::with(int player) const {
  if (player < 0 || player >= kMaxPlayers)
    throw std::invalid_argument("Coalition: member index out of range");
  return Coalition(mask_ | (1u << player));
}

Coalition Coalition::without(int player) const {
  if (player < 0 || player >= kMaxPlayers)
    throw std::invalid_argument("Coalition: member index out of range");
  return Coalition(mask_ & ~(1u << player));
}

std::vector<int> Coalition::members() const {
  std::vector<int> out;
  for (int i = 0; i < kMaxPlayers; ++i)
    if (contains(i)) out.push_back(i);
  return out;
}

double ScheduleResult::net_total() const {
  double s = 0.0;
  for (const auto& m : members) s += m.z;
  return s;
}

double welfare_at(std::span<const Prosumer> members,
                  std::span<const std::vector<double>> d,
                  std::span<const double> z, const Prices& prices) {
  require(members.size() == d.size() && members.size() == z.size(),
          "welfare_at: size mismatch");
  double total_u = 0.0;
  double total_z = 0.0;
  for (std::size_t i = 0; i < members.size(); ++i) {
    total_u += bundle_utility(members[i].devices, d[i]);
    total_z += z[i];
  }
  return total_u - payment(total_z, prices);
}

}  // namespace coopgrid
