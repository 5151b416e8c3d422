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

#include "coopgrid/solver.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace coopgrid {

namespace {

double box_demand(const QuadDevice& dev, double mu) {
  return std::clamp((dev.alpha - mu) / dev.beta, dev.d_min, dev.d_max);
}

double max_alpha(std::span<const QuadDevice> devices) {
  double m = 0.0;
  for (const auto& dev : devices) m = std::max(m, dev.alpha);
  return m;
}

struct Fill {
  std::vector<double> d;
  double mu = 0.0;
};

// Nudge sum(d) onto `total` to within float rounding, moving mass through
// whatever box slack exists.  The KKT point is already within bisection
// tolerance; this only retires the residual.
void settle_residual(std::span<const QuadDevice> devices, std::vector<double>& d,
                     double total) {
  for (int pass = 0; pass < 2; ++pass) {
    double sum = 0.0;
    for (double v : d) sum += v;
    double diff = total - sum;
    if (diff == 0.0) return;
    for (std::size_t k = 0; k < d.size() && diff != 0.0; ++k) {
      const double moved =
          std::clamp(d[k] + diff, devices[k].d_min, devices[k].d_max) - d[k];
      d[k] += moved;
      diff -= moved;
    }
  }
}

// Distribute `total` across the device boxes so that marginal utilities are
// equalized at some price mu >= 0 (beyond aggregate satiation the marginal
// utility is zero and the surplus fills boxes in index order).  Requires
// sum(d_min) <= total <= sum(d_max); [lo, hi] is a bracket hint with
// demand(lo) >= total >= demand(hi), widened to [0, max_alpha + 1] if stale.
Fill fill_to_total(std::span<const QuadDevice> devices, double total, double lo,
                   double hi) {
  double d_min = 0.0, d_max = 0.0;
  for (const auto& dev : devices) {
    d_min += dev.d_min;
    d_max += dev.d_max;
  }
  if (total < d_min - 1e-9 || total > d_max + 1e-9)
    throw std::runtime_error("fill_to_total: target outside device boxes");
  total = std::clamp(total, d_min, d_max);

  Fill fill;
  fill.d.resize(devices.size());

  const double saturated = aggregate_demand(devices, 0.0);
  if (total >= saturated) {
    // Beyond aggregate satiation: plateau utilities, index-order overflow.
    double rem = total;
    for (std::size_t k = 0; k < devices.size(); ++k) {
      fill.d[k] = box_demand(devices[k], 0.0);
      rem -= fill.d[k];
    }
    for (std::size_t k = 0; k < devices.size() && rem > 0.0; ++k) {
      const double add = std::min(rem, devices[k].d_max - fill.d[k]);
      fill.d[k] += add;
      rem -= add;
    }
    fill.mu = 0.0;
    settle_residual(devices, fill.d, total);
    return fill;
  }

  if (!(aggregate_demand(devices, lo) >= total)) lo = 0.0;
  if (!(aggregate_demand(devices, hi) <= total)) hi = max_alpha(devices) + 1.0;

  double mu = 0.5 * (lo + hi);
  for (int it = 0;; ++it) {
    if (it >= kMaxIterations)
      throw std::runtime_error("fill_to_total: bisection did not converge");
    mu = 0.5 * (lo + hi);
    const double demand = aggregate_demand(devices, mu);
    if (std::abs(demand - total) <= kResidualTol) break;
    if (demand > total)
      lo = mu;
    else
      hi = mu;
    if (hi - lo <= kPriceTol) {
      mu = 0.5 * (lo + hi);
      break;
    }
  }

  for (std::size_t k = 0; k < devices.size(); ++k)
    fill.d[k] = box_demand(devices[k], mu);
  fill.mu = mu;
  settle_residual(devices, fill.d, total);
  return fill;
}

void check_prices(const Prices& prices) {
  if (!std::isfinite(prices.retail) || !std::isfinite(prices.export_rate))
    throw std::invalid_argument("solver: non-finite prices");
  if (prices.export_rate < 0.0 || prices.export_rate > prices.retail)
    throw std::invalid_argument("solver: requires 0 <= export <= retail");
}

double response_welfare(const Prosumer& prosumer, const MemberResponse& resp,
                        const Prices& prices) {
  return bundle_utility(prosumer.devices, resp.d) - payment(resp.z, prices);
}

RegimeSolution single_member_solution(const Prosumer& prosumer, Regime regime,
                                      double mu, MemberResponse resp,
                                      const Prices& prices) {
  RegimeSolution out;
  out.regime = regime;
  out.mu = mu;
  out.schedule.mu = mu;
  out.schedule.welfare = response_welfare(prosumer, resp, prices);
  out.schedule.members.push_back({std::move(resp.d), resp.z});
  return out;
}

}  // namespace

const char* regime_name(Regime regime) {
  switch (regime) {
    case Regime::Import:
      return "import";
    case Regime::ZeroNet:
      return "zero-net";
    case Regime::Export:
      return "export";
    case Regime::EnvelopeClampedImport:
      return "envelope-clamped-import";
    case Regime::EnvelopeClampedExport:
      return "envelope-clamped-export";
  }
  return "unknown";
}

double aggregate_demand(std::span<const QuadDevice> devices, double mu) {
  if (!std::isfinite(mu) || mu < 0.0)
    throw std::invalid_argument("aggregate_demand: requires finite mu >= 0");
  double total = 0.0;
  for (const auto& dev : devices) total += box_demand(dev, mu);
  return total;
}

MemberResponse respond_to_price(const Prosumer& prosumer, double mu) {
  if (!std::isfinite(mu) || mu < 0.0)
    throw std::invalid_argument("respond_to_price: requires finite mu >= 0");
  const auto devices = std::span<const QuadDevice>(prosumer.devices);
  const double demand = aggregate_demand(devices, mu);
  const double z_raw = demand - prosumer.renewable;

  MemberResponse resp;
  if (z_raw > prosumer.z_max) {
    Fill fill = fill_to_total(devices, prosumer.renewable + prosumer.z_max, mu,
                              max_alpha(devices) + 1.0);
    resp.d = std::move(fill.d);
    resp.z = prosumer.z_max;
    resp.mu = fill.mu;
    resp.clamped_high = true;
  } else if (z_raw < prosumer.z_min) {
    Fill fill =
        fill_to_total(devices, prosumer.renewable + prosumer.z_min, 0.0, mu);
    resp.d = std::move(fill.d);
    resp.z = prosumer.z_min;
    resp.mu = fill.mu;
    resp.clamped_low = true;
  } else {
    resp.d.resize(devices.size());
    double sum = 0.0;
    for (std::size_t k = 0; k < devices.size(); ++k) {
      resp.d[k] = box_demand(devices[k], mu);
      sum += resp.d[k];
    }
    resp.z = sum - prosumer.renewable;
    resp.mu = mu;
  }
  return resp;
}

double clamped_net(const Prosumer& prosumer, double mu) {
  const double demand = aggregate_demand(prosumer.devices, mu);
  return std::clamp(demand - prosumer.renewable, prosumer.z_min, prosumer.z_max);
}

RegimeSolution best_response(const Prosumer& prosumer, const Prices& prices) {
  check_prices(prices);
  const auto devices = std::span<const QuadDevice>(prosumer.devices);

  MemberResponse at_retail = respond_to_price(prosumer, prices.retail);
  if (at_retail.z > 0.0) {
    const Regime regime = at_retail.clamped_high
                              ? Regime::EnvelopeClampedImport
                              : Regime::Import;
    const double mu = at_retail.clamped_high ? at_retail.mu : prices.retail;
    return single_member_solution(prosumer, regime, mu, std::move(at_retail),
                                  prices);
  }
  // Exact boundary: zero net at the retail rate is the zero-net regime.
  if (at_retail.z == 0.0)
    return single_member_solution(prosumer, Regime::ZeroNet, prices.retail,
                                  std::move(at_retail), prices);

  MemberResponse at_export = respond_to_price(prosumer, prices.export_rate);
  if (at_export.z < 0.0) {
    const Regime regime = at_export.clamped_low ? Regime::EnvelopeClampedExport
                                                : Regime::Export;
    const double mu = at_export.clamped_low ? at_export.mu : prices.export_rate;
    return single_member_solution(prosumer, regime, mu, std::move(at_export),
                                  prices);
  }
  if (at_export.z == 0.0)
    return single_member_solution(prosumer, Regime::ZeroNet, prices.export_rate,
                                  std::move(at_export), prices);

  // Demand crosses the renewable supply between the two rates: consume
  // exactly r at the marginal price that clears it.
  Fill fill = fill_to_total(devices, prosumer.renewable, prices.export_rate,
                            prices.retail);
  MemberResponse resp;
  resp.d = std::move(fill.d);
  resp.z = 0.0;
  resp.mu = fill.mu;
  return single_member_solution(prosumer, Regime::ZeroNet, resp.mu,
                                std::move(resp), prices);
}

RegimeSolution centralized_schedule(std::span<const Prosumer> members,
                                    const Prices& prices) {
  if (members.empty())
    throw std::invalid_argument("centralized_schedule: empty coalition");
  check_prices(prices);

  const auto net_at = [&](double mu) {
    double s = 0.0;
    for (const auto& m : members) s += clamped_net(m, mu);
    return s;
  };

  Regime regime;
  double mu;
  const double net_retail = net_at(prices.retail);
  if (net_retail > 0.0) {
    regime = Regime::Import;
    mu = prices.retail;
  } else {
    const double net_export = net_at(prices.export_rate);
    if (net_export < 0.0) {
      regime = Regime::Export;
      mu = prices.export_rate;
    } else {
      regime = Regime::ZeroNet;
      if (net_retail == 0.0) {
        mu = prices.retail;
      } else if (net_export == 0.0) {
        mu = prices.export_rate;
      } else {
        double lo = prices.export_rate;  // net_at(lo) > 0
        double hi = prices.retail;       // net_at(hi) < 0
        mu = 0.5 * (lo + hi);
        for (int it = 0;; ++it) {
          if (it >= kMaxIterations)
            throw std::runtime_error(
                "centralized_schedule: bisection did not converge");
          mu = 0.5 * (lo + hi);
          const double s = net_at(mu);
          if (std::abs(s) <= kResidualTol) break;
          if (s > 0.0)
            lo = mu;
          else
            hi = mu;
          if (hi - lo <= kPriceTol) {
            mu = 0.5 * (lo + hi);
            break;
          }
        }
      }
    }
  }

  RegimeSolution out;
  out.regime = regime;
  out.mu = mu;
  out.schedule.mu = mu;
  out.schedule.members.resize(members.size());

  std::vector<MemberResponse> responses;
  responses.reserve(members.size());
  for (const auto& m : members) responses.push_back(respond_to_price(m, mu));

  if (regime == Regime::ZeroNet) {
    // Absorb the bisection residual through box slack of an unclamped
    // member so the aggregate is exactly zero.
    double residual = 0.0;
    for (const auto& r : responses) residual += r.z;
    for (std::size_t i = 0; i < responses.size() && residual != 0.0; ++i) {
      auto& resp = responses[i];
      if (resp.clamped_low || resp.clamped_high) continue;
      const auto& devs = members[i].devices;
      for (std::size_t k = 0; k < devs.size() && residual != 0.0; ++k) {
        const double moved =
            std::clamp(resp.d[k] - residual, devs[k].d_min, devs[k].d_max) -
            resp.d[k];
        resp.d[k] += moved;
        resp.z += moved;
        residual += moved;
      }
    }
  }

  double total_u = 0.0;
  double total_z = 0.0;
  for (std::size_t i = 0; i < members.size(); ++i) {
    total_u += bundle_utility(members[i].devices, responses[i].d);
    total_z += responses[i].z;
    out.schedule.members[i] = {std::move(responses[i].d), responses[i].z};
  }
  out.schedule.welfare = total_u - payment(total_z, prices);
  return out;
}

}  // namespace coopgrid
