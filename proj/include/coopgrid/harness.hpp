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
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "coopgrid/alloc.hpp"
#include "coopgrid/game.hpp"
#include "coopgrid/model.hpp"

// Data plumbing and Monte Carlo experiments: household CSV ingestion, a
// synthetic profile generator (stand-in for utility meter data, which is
// rarely redistributable), and the two experiment drivers — welfare gain
// versus coalition size, and individual-rationality violation rates per
// allocation mechanism.  Everything is deterministic given (config, seed):
// each run derives its own sub-seed, so serial and parallel execution
// produce byte-identical reports.

namespace coopgrid {

// ---------------------------------------------------------------------------
// Synthetic households

struct SyntheticParams {
  int count = 20;   // households
  int hours = 24;   // hours per day; profiles repeat the diurnal template
  // Per-household multiplier on the diurnal baseline template.
  double baseline_scale_min = 0.6;
  double baseline_scale_max = 1.6;
  // Peak solar output in kWh; 0 disables a household's generation.
  double solar_capacity_min = 0.0;
  double solar_capacity_max = 4.0;
  // Own-price elasticity of demand; must be negative.
  double elasticity_min = -0.6;
  double elasticity_max = -0.2;
};

// Renders a deterministic households CSV (schema below) for `count`
// households over `hours` hours.  Baselines follow a two-peak diurnal
// template with per-household scale and mild jitter; solar follows a
// midday bell scaled by a per-household capacity; elasticities are
// uniform per household.  Identical (params, seed) give identical bytes.
// Throws std::invalid_argument on degenerate ranges.
std::string synth_generate(const SyntheticParams& params, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Household CSV -> hourly prosumers

// One prosumer per (household, hour): a single flexible load calibrated
// from (retail rate at that hour, baseline_kwh, elasticity), renewable
// supply = solar_kwh, and the symmetric operating envelope.
struct Scenario {
  TouTariff tariff;
  std::vector<std::string> household_ids;
  // by_hour[h][k] is household k's prosumer record for hour h.
  std::vector<std::vector<Prosumer>> by_hour;

  int hours() const { return static_cast<int>(by_hour.size()); }
  int households() const { return static_cast<int>(household_ids.size()); }
};

// CSV schema (UTF-8, comma-separated, header required):
//   household_id,hour,baseline_kwh,solar_kwh,elasticity
// Row-level problems (missing columns, negative energies, hour outside the
// tariff, non-positive baseline, non-negative elasticity, duplicates,
// incomplete hour coverage, envelope infeasibility) are reported with line
// numbers in `errors`; offending households are dropped from the scenario.
struct LoadedHouseholds {
  Scenario scenario;
  std::vector<std::string> errors;
  bool ok() const { return errors.empty(); }
};
LoadedHouseholds load_households_csv(std::istream& in, const TouTariff& tariff,
                                     double envelope_kwh);

// ---------------------------------------------------------------------------
// Scenario configuration (JSON)

// {
//   "tariff": {"retail": 0.2 | [..], "export": 0.1 | [..], "hours": 24,
//              "on_peak_hours": [16,..], "retail_on_peak": 0.4}
//     or "tariff_file": "path/to/tariff.json",
//   "envelope_kwh": 6.0,
//   one of:
//     "households_csv": "path.csv",
//     "synthetic": {"count":.., "hours":.., "baseline_scale":[lo,hi],
//                   "solar_capacity":[lo,hi], "elasticity":[lo,hi]},
//     "prosumers": [{"id":.., "renewable":.., "z_min":.., "z_max":..,
//                    "devices":[{"alpha":..,"beta":..,"d_min":..,"d_max":..}]}],
//   "coalition_sizes": [2,4,6,8],
//   "runs": 100, "seed": 7,
//   "mechanisms": ["equal_division",...],   // default: all six
//   "details": false                        // per-(run,hour) gain rows
// }
struct ScenarioConfig {
  TouTariff tariff = TouTariff({0.4}, {0.2});
  double envelope_kwh = 6.0;
  std::optional<std::string> households_csv;  // resolved path
  std::optional<SyntheticParams> synthetic;
  std::vector<Prosumer> explicit_prosumers;   // same members every hour
  std::vector<int> coalition_sizes = {2, 4, 6, 8};
  int runs = 100;
  std::uint64_t seed = 1;
  std::vector<Mechanism> mechanisms;          // empty = all six
  bool details = false;
};

// Parses and validates a config document; relative paths are resolved
// against `base_dir` (directory of the config file, typically).  Throws
// std::invalid_argument with a field-naming message on bad input.
ScenarioConfig config_from_json(const std::string& text,
                                const std::string& base_dir);

// Stable 64-bit digest of the semantic config content, hex-encoded;
// reports embed it so results can be traced back to their inputs.
std::string config_digest(const ScenarioConfig& config);

// Materializes the configured data source (reads the CSV file, renders
// synthetic households through the same CSV path, or replicates explicit
// prosumers across tariff hours).  Throws on I/O failure or when the CSV
// loader reports errors.
Scenario load_scenario(const ScenarioConfig& config);

// ---------------------------------------------------------------------------
// Experiments

// Coalition members are drawn per run as a prefix of a seeded random
// permutation of the households, so the sweep over sizes is nested within
// each run (larger coalitions contain smaller ones).
//
// Welfare gain of a coalition at one hour, per scheme:
//   (v_scheme(S) - sum_i v({i})) / sum_i v({i}) * 100.
// Hours where |sum_i v({i})| < 1e-9 are excluded from the ratio and
// counted in `degenerate_hours`.
struct GainStats {
  int size = 0;
  Scheme scheme = Scheme::Decentralized;
  double mean_gain_pct = 0.0;
  double stdev_gain_pct = 0.0;  // sample standard deviation over (run, hour)
  std::int64_t samples = 0;
  std::int64_t degenerate_hours = 0;
};

struct GainDetail {
  int run = 0;
  int size = 0;
  int hour = 0;
  double gain_centralized_pct = 0.0;
  double gain_decentralized_pct = 0.0;
};

struct WelfareGainReport {
  std::uint64_t seed = 0;
  std::string digest;
  int runs = 0;
  std::vector<GainStats> stats;     // ordered by size, then scheme
  std::vector<GainDetail> details;  // only when config.details
};

WelfareGainReport experiment_welfare_gain(const Scenario& scenario,
                                          const ScenarioConfig& config);

// Individual-rationality violation rates: the fraction of (run, hour,
// member) triples with psi_i < v({i}) - 1e-8, per mechanism and scheme.
// The dynamic-pricing mechanism is scheme-independent; its identical
// numbers are reported under both scheme rows for table completeness.
struct IrStats {
  int size = 0;
  Mechanism mechanism = Mechanism::EqualDivision;
  Scheme scheme = Scheme::Decentralized;
  std::int64_t violations = 0;
  std::int64_t total = 0;  // runs * hours * size
  double pct() const {
    return total == 0 ? 0.0
                      : 100.0 * static_cast<double>(violations) /
                            static_cast<double>(total);
  }
};

// Tidy per-player daily gain rows for the largest coalition size, for
// external plotting: one row per (player, mechanism, scheme, run-day),
// gain_pct = (sum_h psi_i - sum_h v({i})) / |sum_h v({i})| * 100.
// Days with |sum_h v({i})| < 1e-9 are omitted.
struct PlayerGain {
  std::string player;
  Mechanism mechanism = Mechanism::EqualDivision;
  Scheme scheme = Scheme::Decentralized;
  int day = 0;
  double gain_pct = 0.0;
};

struct IrReport {
  std::uint64_t seed = 0;
  std::string digest;
  int runs = 0;
  std::vector<IrStats> stats;  // ordered by size, mechanism, scheme
  std::vector<PlayerGain> player_gains;  // only when requested
};

IrReport experiment_ir_violation(const Scenario& scenario,
                                 const ScenarioConfig& config,
                                 bool collect_player_gains = false);

// ---------------------------------------------------------------------------
// Report serialization (all writers are deterministic)

std::string welfare_report_to_json(const WelfareGainReport& report);
std::string welfare_report_to_csv(const WelfareGainReport& report);
std::string ir_report_to_json(const IrReport& report);
std::string ir_report_to_csv(const IrReport& report);
std::string player_gains_to_csv(const IrReport& report);

}  // namespace coopgrid

