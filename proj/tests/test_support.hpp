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

#include <algorithm>
#include <string>
#include <vector>

#include "coopgrid/model.hpp"
#include "coopgrid/util.hpp"

// Shared fixtures: the hand-checked two-prosumer instance and a seeded
// random instance generator used by the property suites.

namespace coopgrid::testing {

// Two identical quadratic loads (alpha=1, beta=0.5, box [0,10]); prosumer A
// has no renewables, B has 3 kWh; envelopes +-6; retail 0.4, export 0.2.
// Closed-form optima: standalone surpluses (0.36, 1.24), pooled-billing
// value 1.84, joint-schedule value 1.875 at community price 0.25.
inline std::vector<Prosumer> worked_example() {
  const QuadDevice load{1.0, 0.5, 0.0, 10.0};
  std::vector<Prosumer> members;
  members.emplace_back("A", std::vector<QuadDevice>{load}, 0.0, -6.0, 6.0);
  members.emplace_back("B", std::vector<QuadDevice>{load}, 3.0, -6.0, 6.0);
  return members;
}

inline Prices worked_prices() { return {0.4, 0.2}; }

inline Prices random_prices(Rng& rng) {
  Prices prices;
  prices.retail = rng.uniform(0.2, 0.6);
  prices.export_rate = rng.uniform(0.02, prices.retail);
  return prices;
}

// A random but always-feasible prosumer: 1..max_devices quadratic loads,
// renewables that are zero for some and box-scale for others (so import,
// zero-net and export regimes all occur), and envelopes clipped to keep
// the reachable net-consumption range non-empty.
inline Prosumer random_prosumer(Rng& rng, const std::string& id,
                                int max_devices = 2) {
  const int n_dev = 1 + rng.below(max_devices);
  std::vector<QuadDevice> devices;
  double d_max_sum = 0.0;
  for (int j = 0; j < n_dev; ++j) {
    const double alpha = rng.uniform(0.5, 1.5);
    const double beta = rng.uniform(0.3, 1.2);
    const double d_min = rng.uniform(0.0, 0.2);
    const double d_max = d_min + rng.uniform(0.5, 2.5);
    devices.emplace_back(alpha, beta, d_min, d_max);
    d_max_sum += d_max;
  }
  double renewable = 0.0;
  if (rng.uniform() > 0.4) renewable = rng.uniform(0.0, 1.3 * d_max_sum);
  const double z_max = rng.uniform(0.5, 6.0);
  double z_min = -rng.uniform(0.5, 6.0);
  z_min = std::min(z_min, d_max_sum - renewable - 0.1);
  return Prosumer(id, std::move(devices), renewable, z_min, z_max);
}

inline std::vector<Prosumer> random_community(Rng& rng, int n,
                                              int max_devices = 2) {
  std::vector<Prosumer> members;
  members.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    members.push_back(random_prosumer(rng, "p" + std::to_string(i),
                                      max_devices));
  return members;
}

}  // namespace coopgrid::testing

