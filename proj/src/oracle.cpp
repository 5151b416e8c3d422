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

#include "coopgrid/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace coopgrid {

namespace {

constexpr double kMaxGridPoints = 1e7;

struct Dim {
  int member;
  int device;
  std::vector<double> coords;
};

// Evaluate every combination of the per-dimension coordinate lists and keep
// the best envelope-feasible point.
OracleResult sweep(std::span<const Prosumer> members, const Prices& prices,
                   std::vector<Dim>& dims) {
  double points = 1.0;
  for (const auto& dim : dims) points *= static_cast<double>(dim.coords.size());
  if (points > kMaxGridPoints)
    throw std::invalid_argument("grid_oracle: grid exceeds 10^7 points");

  OracleResult best;
  std::vector<std::size_t> idx(dims.size(), 0);
  std::vector<std::vector<double>> d(members.size());
  for (std::size_t i = 0; i < members.size(); ++i)
    d[i].resize(members[i].devices.size(), 0.0);

  for (;;) {
    for (std::size_t k = 0; k < dims.size(); ++k)
      d[dims[k].member][dims[k].device] = dims[k].coords[idx[k]];

    bool feasible = true;
    double total_u = 0.0;
    double total_z = 0.0;
    for (std::size_t i = 0; i < members.size() && feasible; ++i) {
      double sum = 0.0;
      for (double v : d[i]) sum += v;
      const double z = sum - members[i].renewable;
      if (z < members[i].z_min || z > members[i].z_max) {
        feasible = false;
        break;
      }
      total_z += z;
      total_u += bundle_utility(members[i].devices, d[i]);
    }
    if (feasible) {
      const double w = total_u - payment(total_z, prices);
      if (!best.found || w > best.welfare) {
        best.found = true;
        best.welfare = w;
        best.d = d;
      }
    }

    std::size_t k = 0;
    for (; k < dims.size(); ++k) {
      if (++idx[k] < dims[k].coords.size()) break;
      idx[k] = 0;
    }
    if (k == dims.size()) break;
  }
  return best;
}

std::vector<double> steps(double lo, double hi, double resolution) {
  std::vector<double> coords;
  for (double v = lo; v < hi; v += resolution) coords.push_back(v);
  coords.push_back(hi);  // upper corner always present
  return coords;
}

// Search-box upper corners.  Beyond satiation a device adds no utility while
// the aggregate payment is non-decreasing, so those coordinates can only
// matter when the export envelope forces extra consumption; keep the full
// box in that case, otherwise cap at the satiation point.
std::vector<double> search_caps(const Prosumer& member) {
  std::vector<double> caps(member.devices.size());
  double capped_total = 0.0;
  for (std::size_t k = 0; k < caps.size(); ++k) {
    const auto& dev = member.devices[k];
    caps[k] = std::clamp(dev.satiation(), dev.d_min, dev.d_max);
    capped_total += caps[k];
  }
  if (capped_total < member.renewable + member.z_min)
    for (std::size_t k = 0; k < caps.size(); ++k)
      caps[k] = member.devices[k].d_max;
  return caps;
}

}  // namespace

OracleResult grid_oracle(std::span<const Prosumer> members,
                         const Prices& prices, double resolution) {
  if (members.empty()) throw std::invalid_argument("grid_oracle: no members");
  if (!std::isfinite(resolution) || resolution <= 0.0)
    throw std::invalid_argument("grid_oracle: requires resolution > 0");
  // Estimate the sweep size before materializing any coordinate list; a
  // too-fine resolution must fail cleanly instead of exhausting memory.
  double estimated = 1.0;
  for (const auto& member : members) {
    const auto caps = search_caps(member);
    for (std::size_t k = 0; k < member.devices.size(); ++k)
      estimated *= (caps[k] - member.devices[k].d_min) / resolution + 2.0;
  }
  if (estimated > kMaxGridPoints)
    throw std::invalid_argument("grid_oracle: grid exceeds 10^7 points");
  std::vector<Dim> dims;
  for (std::size_t i = 0; i < members.size(); ++i) {
    const auto caps = search_caps(members[i]);
    for (std::size_t k = 0; k < members[i].devices.size(); ++k) {
      const auto& dev = members[i].devices[k];
      dims.push_back({static_cast<int>(i), static_cast<int>(k),
                      steps(dev.d_min, caps[k], resolution)});
    }
  }
  return sweep(members, prices, dims);
}

OracleResult refined_grid_search(std::span<const Prosumer> members,
                                 const Prices& prices, int points_per_dim,
                                 int rounds) {
  if (points_per_dim < 3 || rounds < 1)
    throw std::invalid_argument("refined_grid_search: bad parameters");

  struct Box {
    double lo, hi;
  };
  std::vector<Dim> dims;
  std::vector<Box> boxes;
  std::vector<Box> full;
  for (std::size_t i = 0; i < members.size(); ++i) {
    const auto caps = search_caps(members[i]);
    for (std::size_t k = 0; k < members[i].devices.size(); ++k) {
      const auto& dev = members[i].devices[k];
      dims.push_back({static_cast<int>(i), static_cast<int>(k), {}});
      boxes.push_back({dev.d_min, caps[k]});
      full.push_back({dev.d_min, caps[k]});
    }
  }

  OracleResult best;
  for (int round = 0; round < rounds; ++round) {
    for (std::size_t k = 0; k < dims.size(); ++k) {
      dims[k].coords.clear();
      const double width = boxes[k].hi - boxes[k].lo;
      for (int j = 0; j < points_per_dim; ++j)
        dims[k].coords.push_back(boxes[k].lo +
                                 width * j / (points_per_dim - 1));
      // Keep the incumbent on every round's grid: the window midpoint is
      // not a lattice point, so without this a narrow envelope slab can
      // slip between grid lines and end the search at a coarse round.
      if (best.found)
        dims[k].coords.push_back(best.d[dims[k].member][dims[k].device]);
    }
    OracleResult round_best = sweep(members, prices, dims);
    if (!round_best.found) break;
    if (!best.found || round_best.welfare > best.welfare) best = round_best;

    // Shrink each box around the incumbent coordinate.  Two cells a side
    // leaves room to keep tracking a ridge that runs diagonally through
    // the box while still contracting geometrically.
    for (std::size_t k = 0; k < dims.size(); ++k) {
      const double at = best.d[dims[k].member][dims[k].device];
      const double cell = (boxes[k].hi - boxes[k].lo) / (points_per_dim - 1);
      boxes[k].lo = std::max(full[k].lo, at - 2.0 * cell);
      boxes[k].hi = std::min(full[k].hi, at + 2.0 * cell);
    }
  }
  return best;
}

}  // namespace coopgrid
