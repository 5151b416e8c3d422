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

#include "coopgrid/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

#include "coopgrid/solver.hpp"
#include "coopgrid/util.hpp"
#include "json.hpp"

namespace coopgrid {

namespace {

constexpr std::uint64_t kPermutationStream = 10;  // synth uses streams 0..3
constexpr double kDegenerateWelfare = 1e-9;

[[noreturn]] void fail(const std::string& message) {
  throw std::invalid_argument(message);
}

std::string fmt(double v) {
  char buf[32];
  const auto result = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, result.ptr);
}

// ---------------------------------------------------------------------------
// Synthetic generator

// Two-peak residential diurnal baseline (kWh per hour, before scaling).
constexpr double kDiurnal[24] = {
    0.45, 0.40, 0.38, 0.36, 0.38, 0.45, 0.60, 0.80, 0.90, 0.85, 0.80, 0.80,
    0.85, 0.85, 0.80, 0.85, 1.00, 1.20, 1.35, 1.40, 1.30, 1.10, 0.80, 0.55};

double solar_shape(int hour_of_day) {
  if (hour_of_day <= 6 || hour_of_day >= 18) return 0.0;
  const double s = std::sin(M_PI * (hour_of_day - 6) / 12.0);
  return s * s;
}

void check_range(const char* name, double lo, double hi) {
  if (!(lo <= hi)) {
    std::ostringstream msg;
    msg << "synthetic: degenerate " << name << " range [" << lo << ", " << hi
        << "]";
    fail(msg.str());
  }
}

}  // namespace

std::string synth_generate(const SyntheticParams& params, std::uint64_t seed) {
  if (params.count < 1) fail("synthetic: count must be >= 1");
  if (params.hours < 1) fail("synthetic: hours must be >= 1");
  check_range("baseline_scale", params.baseline_scale_min,
              params.baseline_scale_max);
  check_range("solar_capacity", params.solar_capacity_min,
              params.solar_capacity_max);
  check_range("elasticity", params.elasticity_min, params.elasticity_max);
  if (params.baseline_scale_min <= 0.0)
    fail("synthetic: baseline_scale must be positive");
  if (params.solar_capacity_min < 0.0)
    fail("synthetic: solar_capacity must be non-negative");
  if (params.elasticity_max >= 0.0)
    fail("synthetic: elasticity must be negative");

  std::string out = "household_id,hour,baseline_kwh,solar_kwh,elasticity\n";
  char line[160];
  for (int k = 0; k < params.count; ++k) {
    const double scale =
        Rng(sub_seed(seed, 0, static_cast<std::uint64_t>(k)))
            .uniform(params.baseline_scale_min, params.baseline_scale_max);
    const double capacity =
        Rng(sub_seed(seed, 1, static_cast<std::uint64_t>(k)))
            .uniform(params.solar_capacity_min, params.solar_capacity_max);
    const double elasticity =
        Rng(sub_seed(seed, 2, static_cast<std::uint64_t>(k)))
            .uniform(params.elasticity_min, params.elasticity_max);
    for (int h = 0; h < params.hours; ++h) {
      const std::uint64_t cell =
          static_cast<std::uint64_t>(k) * static_cast<std::uint64_t>(params.hours) +
          static_cast<std::uint64_t>(h);
      const double jitter = 0.9 + 0.2 * Rng(sub_seed(seed, 3, cell)).uniform();
      const double baseline = kDiurnal[h % 24] * scale * jitter;
      const double solar = capacity * solar_shape(h % 24);
      std::snprintf(line, sizeof(line), "h%03d,%d,%.6f,%.6f,%.4f\n", k + 1, h,
                    baseline, solar, elasticity);
      out += line;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Household CSV

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string current;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(current);
      current.clear();
    } else if (c != '\r') {
      current += c;
    }
  }
  fields.push_back(current);
  for (auto& f : fields) {
    const auto begin = f.find_first_not_of(" \t");
    const auto end = f.find_last_not_of(" \t");
    f = begin == std::string::npos ? "" : f.substr(begin, end - begin + 1);
  }
  return fields;
}

bool parse_double(const std::string& s, double& out) {
  const char* begin = s.data();
  const char* end = begin + s.size();
  const auto result = std::from_chars(begin, end, out);
  return result.ec == std::errc() && result.ptr == end && std::isfinite(out);
}

bool parse_int(const std::string& s, int& out) {
  const char* begin = s.data();
  const char* end = begin + s.size();
  const auto result = std::from_chars(begin, end, out);
  return result.ec == std::errc() && result.ptr == end;
}

const char* kCsvHeader = "household_id,hour,baseline_kwh,solar_kwh,elasticity";

struct CsvRow {
  std::string id;
  int hour = 0;
  double baseline = 0.0;
  double solar = 0.0;
  double elasticity = 0.0;
  int line = 0;
};

}  // namespace

LoadedHouseholds load_households_csv(std::istream& in, const TouTariff& tariff,
                                     double envelope_kwh) {
  if (!(envelope_kwh > 0.0))
    fail("load_households_csv: envelope_kwh must be positive");
  LoadedHouseholds out{Scenario{tariff, {}, {}}, {}};
  auto error = [&out](int line, const std::string& message) {
    std::ostringstream msg;
    if (line > 0) msg << "line " << line << ": ";
    msg << message;
    out.errors.push_back(msg.str());
  };

  std::string line;
  if (!std::getline(in, line)) {
    error(1, std::string("missing header, expected: ") + kCsvHeader);
    out.scenario.by_hour.resize(static_cast<std::size_t>(tariff.hours()));
    return out;
  }
  {
    const auto header = split_fields(line);
    const auto expected = split_fields(kCsvHeader);
    if (header != expected) {
      error(1, std::string("bad header, expected: ") + kCsvHeader);
      out.scenario.by_hour.resize(static_cast<std::size_t>(tariff.hours()));
      return out;
    }
  }

  const int hours = tariff.hours();
  std::vector<CsvRow> rows;
  std::map<std::pair<std::string, int>, int> first_line;  // duplicate tracking
  std::set<std::string> bad_households;
  std::vector<std::string> order;  // households in first-appearance order

  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto f = split_fields(line);
    if (f.size() != 5) {
      std::ostringstream msg;
      msg << "expected 5 fields, got " << f.size();
      error(lineno, msg.str());
      continue;
    }
    CsvRow row;
    row.id = f[0];
    row.line = lineno;
    bool ok = true;
    if (row.id.empty()) {
      error(lineno, "empty household_id");
      ok = false;
    }
    if (!parse_int(f[1], row.hour)) {
      error(lineno, "bad number in column hour: '" + f[1] + "'");
      ok = false;
    }
    if (!parse_double(f[2], row.baseline)) {
      error(lineno, "bad number in column baseline_kwh: '" + f[2] + "'");
      ok = false;
    }
    if (!parse_double(f[3], row.solar)) {
      error(lineno, "bad number in column solar_kwh: '" + f[3] + "'");
      ok = false;
    }
    if (!parse_double(f[4], row.elasticity)) {
      error(lineno, "bad number in column elasticity: '" + f[4] + "'");
      ok = false;
    }
    if (!ok) {
      if (!row.id.empty()) bad_households.insert(row.id);
      continue;
    }
    if (row.hour < 0 || row.hour >= hours) {
      std::ostringstream msg;
      msg << "hour " << row.hour << " outside tariff (0.." << hours - 1 << ")";
      error(lineno, msg.str());
      bad_households.insert(row.id);
      continue;
    }
    if (row.baseline <= 0.0) {
      error(lineno, "baseline_kwh must be positive");
      bad_households.insert(row.id);
      continue;
    }
    if (row.solar < 0.0) {
      error(lineno, "negative solar_kwh");
      bad_households.insert(row.id);
      continue;
    }
    if (row.elasticity >= 0.0) {
      error(lineno, "elasticity must be negative");
      bad_households.insert(row.id);
      continue;
    }
    const auto key = std::make_pair(row.id, row.hour);
    const auto [it, inserted] = first_line.emplace(key, lineno);
    if (!inserted) {
      std::ostringstream msg;
      msg << "duplicate row for household " << row.id << " hour " << row.hour
          << " (first at line " << it->second << ")";
      error(lineno, msg.str());
      bad_households.insert(row.id);
      continue;
    }
    if (std::find(order.begin(), order.end(), row.id) == order.end())
      order.push_back(row.id);
    rows.push_back(std::move(row));
  }

  // Coverage: every surviving household needs one row per tariff hour.
  std::map<std::string, std::vector<const CsvRow*>> by_household;
  for (const auto& row : rows)
    if (!bad_households.count(row.id)) by_household[row.id].push_back(&row);
  for (const auto& id : order) {
    if (bad_households.count(id)) continue;
    std::vector<bool> seen(static_cast<std::size_t>(hours), false);
    for (const CsvRow* row : by_household[id])
      seen[static_cast<std::size_t>(row->hour)] = true;
    for (int h = 0; h < hours; ++h)
      if (!seen[static_cast<std::size_t>(h)]) {
        std::ostringstream msg;
        msg << "household " << id << ": missing hour " << h;
        error(0, msg.str());
        bad_households.insert(id);
        break;
      }
  }

  // Build prosumers for the surviving households.
  out.scenario.by_hour.resize(static_cast<std::size_t>(hours));
  for (const auto& id : order) {
    if (bad_households.count(id)) continue;
    std::vector<Prosumer> per_hour;
    bool household_ok = true;
    std::vector<const CsvRow*> cells(static_cast<std::size_t>(hours), nullptr);
    for (const CsvRow* row : by_household[id])
      cells[static_cast<std::size_t>(row->hour)] = row;
    for (int h = 0; h < hours && household_ok; ++h) {
      const CsvRow* row = cells[static_cast<std::size_t>(h)];
      try {
        const QuadDevice device = calibrate_device(
            tariff.at(h).retail, row->baseline, row->elasticity);
        per_hour.emplace_back(id, std::vector<QuadDevice>{device}, row->solar,
                              -envelope_kwh, envelope_kwh);
      } catch (const std::invalid_argument& e) {
        error(row->line, e.what());
        household_ok = false;
      }
    }
    if (!household_ok) continue;
    out.scenario.household_ids.push_back(id);
    for (int h = 0; h < hours; ++h)
      out.scenario.by_hour[static_cast<std::size_t>(h)].push_back(
          std::move(per_hour[static_cast<std::size_t>(h)]));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Config

namespace {

using nlohmann::json;

double number_field(const json& doc, const char* key) {
  if (!doc.contains(key) || !doc.at(key).is_number())
    fail(std::string("config: '") + key + "' must be a number");
  return doc.at(key).get<double>();
}

std::vector<double> rate_vector(const json& value, int hours,
                                const char* key) {
  std::vector<double> rates;
  if (value.is_number()) {
    rates.assign(static_cast<std::size_t>(hours), value.get<double>());
  } else if (value.is_array()) {
    for (const auto& v : value) {
      if (!v.is_number())
        fail(std::string("tariff: '") + key + "' entries must be numbers");
      rates.push_back(v.get<double>());
    }
    if (static_cast<int>(rates.size()) != hours)
      fail(std::string("tariff: '") + key + "' length must match hours");
  } else {
    fail(std::string("tariff: '") + key + "' must be a number or array");
  }
  return rates;
}

TouTariff tariff_from_json(const json& doc) {
  if (!doc.is_object()) fail("tariff: must be an object");
  for (const auto& [key, value] : doc.items()) {
    static const std::set<std::string> kKeys = {
        "hours", "retail", "export", "on_peak_hours", "retail_on_peak"};
    if (!kKeys.count(key)) fail("tariff: unknown key '" + key + "'");
  }
  if (!doc.contains("retail") || !doc.contains("export"))
    fail("tariff: 'retail' and 'export' are required");

  int hours = 0;
  if (doc.contains("hours")) {
    if (!doc.at("hours").is_number_integer() || doc.at("hours").get<int>() < 1)
      fail("tariff: 'hours' must be a positive integer");
    hours = doc.at("hours").get<int>();
  } else if (doc.at("retail").is_array()) {
    hours = static_cast<int>(doc.at("retail").size());
  } else if (doc.at("export").is_array()) {
    hours = static_cast<int>(doc.at("export").size());
  } else {
    hours = 1;
  }

  std::vector<double> retail = rate_vector(doc.at("retail"), hours, "retail");
  std::vector<double> export_rate =
      rate_vector(doc.at("export"), hours, "export");

  if (doc.contains("on_peak_hours")) {
    if (!doc.contains("retail_on_peak"))
      fail("tariff: 'retail_on_peak' is required with 'on_peak_hours'");
    const double peak = number_field(doc, "retail_on_peak");
    if (!doc.at("on_peak_hours").is_array())
      fail("tariff: 'on_peak_hours' must be an array");
    for (const auto& v : doc.at("on_peak_hours")) {
      if (!v.is_number_integer())
        fail("tariff: 'on_peak_hours' entries must be integers");
      const int h = v.get<int>();
      if (h < 0 || h >= hours)
        fail("tariff: on-peak hour outside 0..hours-1");
      retail[static_cast<std::size_t>(h)] = peak;
    }
  } else if (doc.contains("retail_on_peak")) {
    fail("tariff: 'retail_on_peak' requires 'on_peak_hours'");
  }
  try {
    return TouTariff(std::move(retail), std::move(export_rate));
  } catch (const std::invalid_argument& e) {
    fail(std::string("tariff: ") + e.what());
  }
}

std::pair<double, double> range_field(const json& doc, const char* key,
                                      double lo, double hi) {
  if (!doc.contains(key)) return {lo, hi};
  const auto& v = doc.at(key);
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
    fail(std::string("synthetic: '") + key + "' must be [lo, hi]");
  return {v[0].get<double>(), v[1].get<double>()};
}

SyntheticParams synthetic_from_json(const json& doc, int tariff_hours) {
  if (!doc.is_object()) fail("config: 'synthetic' must be an object");
  for (const auto& [key, value] : doc.items()) {
    static const std::set<std::string> kKeys = {
        "count", "hours", "baseline_scale", "solar_capacity", "elasticity"};
    if (!kKeys.count(key)) fail("synthetic: unknown key '" + key + "'");
  }
  SyntheticParams params;
  params.hours = tariff_hours;
  if (doc.contains("count")) {
    if (!doc.at("count").is_number_integer())
      fail("synthetic: 'count' must be an integer");
    params.count = doc.at("count").get<int>();
  }
  if (doc.contains("hours")) {
    if (!doc.at("hours").is_number_integer())
      fail("synthetic: 'hours' must be an integer");
    params.hours = doc.at("hours").get<int>();
  }
  if (params.hours != tariff_hours)
    fail("synthetic: 'hours' must match the tariff hours");
  std::tie(params.baseline_scale_min, params.baseline_scale_max) =
      range_field(doc, "baseline_scale", params.baseline_scale_min,
                  params.baseline_scale_max);
  std::tie(params.solar_capacity_min, params.solar_capacity_max) =
      range_field(doc, "solar_capacity", params.solar_capacity_min,
                  params.solar_capacity_max);
  std::tie(params.elasticity_min, params.elasticity_max) =
      range_field(doc, "elasticity", params.elasticity_min,
                  params.elasticity_max);
  return params;
}

Prosumer prosumer_from_json(const json& doc) {
  if (!doc.is_object()) fail("config: prosumer entries must be objects");
  for (const auto& [key, value] : doc.items()) {
    static const std::set<std::string> kKeys = {"id", "renewable", "z_min",
                                                "z_max", "devices"};
    if (!kKeys.count(key)) fail("prosumer: unknown key '" + key + "'");
  }
  if (!doc.contains("id") || !doc.at("id").is_string())
    fail("prosumer: 'id' (string) is required");
  std::vector<QuadDevice> devices;
  if (doc.contains("devices")) {
    if (!doc.at("devices").is_array())
      fail("prosumer: 'devices' must be an array");
    for (const auto& d : doc.at("devices")) {
      for (const auto& [key, value] : d.items()) {
        static const std::set<std::string> kDev = {"alpha", "beta", "d_min",
                                                   "d_max"};
        if (!kDev.count(key)) fail("device: unknown key '" + key + "'");
      }
      devices.push_back(QuadDevice{
          number_field(d, "alpha"), number_field(d, "beta"),
          d.contains("d_min") ? number_field(d, "d_min") : 0.0,
          number_field(d, "d_max")});
    }
  }
  try {
    return Prosumer(doc.at("id").get<std::string>(), std::move(devices),
                    number_field(doc, "renewable"), number_field(doc, "z_min"),
                    number_field(doc, "z_max"));
  } catch (const std::invalid_argument& e) {
    fail(std::string("prosumer '") + doc.at("id").get<std::string>() +
         "': " + e.what());
  }
}

std::string resolve_path(const std::string& path, const std::string& base_dir) {
  std::filesystem::path p(path);
  if (p.is_absolute() || base_dir.empty()) return path;
  return (std::filesystem::path(base_dir) / p).string();
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("cannot open file: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::vector<Mechanism> resolved_mechanisms(const ScenarioConfig& config) {
  if (!config.mechanisms.empty()) return config.mechanisms;
  const auto all = all_mechanisms();
  return {all.begin(), all.end()};
}

}  // namespace

ScenarioConfig config_from_json(const std::string& text,
                                const std::string& base_dir) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(std::string("config: ") + e.what());
  }
  if (!doc.is_object()) fail("config: root must be an object");
  for (const auto& [key, value] : doc.items()) {
    static const std::set<std::string> kKeys = {
        "tariff",     "tariff_file",     "envelope_kwh", "households_csv",
        "synthetic",  "prosumers",       "coalition_sizes", "runs",
        "seed",       "mechanisms",      "details"};
    if (!kKeys.count(key)) fail("config: unknown key '" + key + "'");
  }

  ScenarioConfig config;
  const bool has_tariff = doc.contains("tariff");
  const bool has_tariff_file = doc.contains("tariff_file");
  if (has_tariff == has_tariff_file)
    fail("config: exactly one of 'tariff' or 'tariff_file' is required");
  if (has_tariff) {
    config.tariff = tariff_from_json(doc.at("tariff"));
  } else {
    if (!doc.at("tariff_file").is_string())
      fail("config: 'tariff_file' must be a string");
    const std::string path =
        resolve_path(doc.at("tariff_file").get<std::string>(), base_dir);
    json tariff_doc;
    try {
      tariff_doc = json::parse(read_file(path));
    } catch (const json::parse_error& e) {
      fail("tariff file " + path + ": " + e.what());
    }
    config.tariff = tariff_from_json(tariff_doc);
  }

  if (doc.contains("envelope_kwh")) {
    config.envelope_kwh = number_field(doc, "envelope_kwh");
    if (!(config.envelope_kwh > 0.0))
      fail("config: 'envelope_kwh' must be positive");
  }

  const int sources = static_cast<int>(doc.contains("households_csv")) +
                      static_cast<int>(doc.contains("synthetic")) +
                      static_cast<int>(doc.contains("prosumers"));
  if (sources != 1)
    fail("config: exactly one of 'households_csv', 'synthetic' or "
         "'prosumers' is required");
  if (doc.contains("households_csv")) {
    if (!doc.at("households_csv").is_string())
      fail("config: 'households_csv' must be a string");
    config.households_csv =
        resolve_path(doc.at("households_csv").get<std::string>(), base_dir);
  } else if (doc.contains("synthetic")) {
    config.synthetic =
        synthetic_from_json(doc.at("synthetic"), config.tariff.hours());
  } else {
    if (!doc.at("prosumers").is_array() || doc.at("prosumers").empty())
      fail("config: 'prosumers' must be a non-empty array");
    std::set<std::string> ids;
    for (const auto& p : doc.at("prosumers")) {
      config.explicit_prosumers.push_back(prosumer_from_json(p));
      if (!ids.insert(config.explicit_prosumers.back().id).second)
        fail("config: duplicate prosumer id '" +
             config.explicit_prosumers.back().id + "'");
    }
  }

  if (doc.contains("coalition_sizes")) {
    if (!doc.at("coalition_sizes").is_array() ||
        doc.at("coalition_sizes").empty())
      fail("config: 'coalition_sizes' must be a non-empty array");
    config.coalition_sizes.clear();
    for (const auto& v : doc.at("coalition_sizes")) {
      if (!v.is_number_integer() || v.get<int>() < 1)
        fail("config: coalition sizes must be positive integers");
      config.coalition_sizes.push_back(v.get<int>());
    }
  } else if (!config.explicit_prosumers.empty()) {
    config.coalition_sizes = {
        static_cast<int>(config.explicit_prosumers.size())};
  }

  if (doc.contains("runs")) {
    if (!doc.at("runs").is_number_integer() || doc.at("runs").get<int>() < 1)
      fail("config: 'runs' must be a positive integer");
    config.runs = doc.at("runs").get<int>();
  }
  if (doc.contains("seed")) {
    if (!doc.at("seed").is_number_unsigned())
      fail("config: 'seed' must be a non-negative integer");
    config.seed = doc.at("seed").get<std::uint64_t>();
  }
  if (doc.contains("mechanisms")) {
    if (!doc.at("mechanisms").is_array())
      fail("config: 'mechanisms' must be an array");
    for (const auto& v : doc.at("mechanisms")) {
      if (!v.is_string()) fail("config: mechanism names must be strings");
      config.mechanisms.push_back(mechanism_from_name(v.get<std::string>()));
    }
  }
  if (doc.contains("details")) {
    if (!doc.at("details").is_boolean())
      fail("config: 'details' must be a boolean");
    config.details = doc.at("details").get<bool>();
  }
  return config;
}

std::string config_digest(const ScenarioConfig& config) {
  json j;
  j["tariff"]["retail"] = config.tariff.retail();
  j["tariff"]["export"] = config.tariff.export_rate();
  j["envelope_kwh"] = config.envelope_kwh;
  if (config.households_csv) j["source"]["households_csv"] = *config.households_csv;
  if (config.synthetic) {
    const auto& s = *config.synthetic;
    j["source"]["synthetic"] = {
        {"count", s.count},
        {"hours", s.hours},
        {"baseline_scale", {s.baseline_scale_min, s.baseline_scale_max}},
        {"solar_capacity", {s.solar_capacity_min, s.solar_capacity_max}},
        {"elasticity", {s.elasticity_min, s.elasticity_max}}};
  }
  if (!config.explicit_prosumers.empty()) {
    auto& list = j["source"]["prosumers"];
    list = json::array();
    for (const auto& p : config.explicit_prosumers) {
      json entry = {{"id", p.id},
                    {"renewable", p.renewable},
                    {"z_min", p.z_min},
                    {"z_max", p.z_max}};
      entry["devices"] = json::array();
      for (const auto& d : p.devices)
        entry["devices"].push_back({{"alpha", d.alpha},
                                    {"beta", d.beta},
                                    {"d_min", d.d_min},
                                    {"d_max", d.d_max}});
      list.push_back(std::move(entry));
    }
  }
  j["coalition_sizes"] = config.coalition_sizes;
  j["runs"] = config.runs;
  j["seed"] = config.seed;
  auto& mechs = j["mechanisms"];
  mechs = json::array();
  for (Mechanism m : resolved_mechanisms(config)) mechs.push_back(mechanism_name(m));
  j["details"] = config.details;

  char hex[17];
  std::snprintf(hex, sizeof(hex), "%016llx",
                static_cast<unsigned long long>(fnv1a(j.dump())));
  return hex;
}

Scenario load_scenario(const ScenarioConfig& config) {
  if (config.households_csv) {
    std::ifstream in(*config.households_csv);
    if (!in) fail("cannot open households CSV: " + *config.households_csv);
    LoadedHouseholds loaded =
        load_households_csv(in, config.tariff, config.envelope_kwh);
    if (!loaded.ok()) {
      std::ostringstream msg;
      msg << "households CSV " << *config.households_csv << " has "
          << loaded.errors.size() << " problem(s):";
      for (const auto& e : loaded.errors) msg << "\n  " << e;
      fail(msg.str());
    }
    return std::move(loaded.scenario);
  }
  if (config.synthetic) {
    const std::string csv = synth_generate(*config.synthetic, config.seed);
    std::istringstream in(csv);
    LoadedHouseholds loaded =
        load_households_csv(in, config.tariff, config.envelope_kwh);
    if (!loaded.ok()) {
      std::ostringstream msg;
      msg << "synthetic generator produced invalid rows:";
      for (const auto& e : loaded.errors) msg << "\n  " << e;
      throw std::runtime_error(msg.str());
    }
    return std::move(loaded.scenario);
  }
  Scenario scenario{config.tariff, {}, {}};
  for (const auto& p : config.explicit_prosumers)
    scenario.household_ids.push_back(p.id);
  scenario.by_hour.assign(static_cast<std::size_t>(config.tariff.hours()),
                          config.explicit_prosumers);
  return scenario;
}

// ---------------------------------------------------------------------------
// Experiments

namespace {

struct Solo {
  MemberSchedule sched;
  double welfare = 0.0;
  double utility = 0.0;
};

// Standalone best responses for every (hour, household); reused across
// runs, sizes and both schemes.
std::vector<std::vector<Solo>> solve_standalone(const Scenario& scenario) {
  std::vector<std::vector<Solo>> solos(
      static_cast<std::size_t>(scenario.hours()));
  for (int h = 0; h < scenario.hours(); ++h) {
    const Prices prices = scenario.tariff.at(h);
    for (const auto& prosumer : scenario.by_hour[static_cast<std::size_t>(h)]) {
      const RegimeSolution solved = best_response(prosumer, prices);
      Solo solo;
      solo.sched = solved.schedule.members.at(0);
      solo.welfare = solved.schedule.welfare;
      solo.utility = bundle_utility(prosumer.devices, solo.sched.d);
      solos[static_cast<std::size_t>(h)].push_back(std::move(solo));
    }
  }
  return solos;
}

std::vector<int> seeded_permutation(int n, std::uint64_t seed) {
  std::vector<int> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(seed);
  for (int i = n - 1; i > 0; --i)
    std::swap(perm[static_cast<std::size_t>(i)],
              perm[static_cast<std::size_t>(rng.below(i + 1))]);
  return perm;
}

void validate_experiment(const Scenario& scenario,
                         const ScenarioConfig& config) {
  if (scenario.households() == 0)
    fail("experiment: scenario has no households");
  if (scenario.hours() == 0) fail("experiment: scenario has no hours");
  for (int s : config.coalition_sizes)
    if (s < 1 || s > scenario.households()) {
      std::ostringstream msg;
      msg << "experiment: coalition size " << s << " exceeds the "
          << scenario.households() << " household(s)";
      fail(msg.str());
    }
  if (config.runs < 1) fail("experiment: runs must be >= 1");
}

std::vector<Prosumer> members_at(const Scenario& scenario, int hour,
                                 std::span<const int> members) {
  std::vector<Prosumer> subset;
  subset.reserve(members.size());
  for (int k : members)
    subset.push_back(
        scenario.by_hour[static_cast<std::size_t>(hour)]
                        [static_cast<std::size_t>(k)]);
  return subset;
}

// AllocationContext assembled from the standalone cache: under
// decentralized control no solver call is needed at all; under joint
// scheduling only the coalition solve runs.
AllocationContext context_from_cache(
    const Scenario& scenario, const std::vector<std::vector<Solo>>& solos,
    std::span<const int> members, int hour, Scheme scheme) {
  AllocationContext ctx;
  ctx.scheme = scheme;
  ctx.prices = scenario.tariff.at(hour);
  ctx.hour = hour;
  ctx.members = members_at(scenario, hour, members);
  for (int k : members) {
    const Solo& solo =
        solos[static_cast<std::size_t>(hour)][static_cast<std::size_t>(k)];
    ctx.standalone.push_back(solo.welfare);
    ctx.standalone_z.push_back(solo.sched.z);
    if (scheme == Scheme::Decentralized) {
      ctx.schedules.push_back(solo.sched);
      ctx.utilities.push_back(solo.utility);
    }
  }
  if (scheme == Scheme::Centralized) {
    const RegimeSolution solved = centralized_schedule(ctx.members, ctx.prices);
    ctx.schedules = solved.schedule.members;
    for (std::size_t i = 0; i < ctx.members.size(); ++i)
      ctx.utilities.push_back(
          bundle_utility(ctx.members[i].devices, ctx.schedules[i].d));
  }
  double utility_sum = 0.0;
  for (std::size_t i = 0; i < ctx.members.size(); ++i) {
    utility_sum += ctx.utilities[i];
    ctx.z_total += ctx.schedules[i].z;
  }
  ctx.coalition_payment = payment(ctx.z_total, ctx.prices);
  ctx.welfare = utility_sum - ctx.coalition_payment;
  return ctx;
}

double sample_stdev(const std::vector<double>& xs, double mean) {
  if (xs.size() < 2) return 0.0;
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

}  // namespace

WelfareGainReport experiment_welfare_gain(const Scenario& scenario,
                                          const ScenarioConfig& config) {
  validate_experiment(scenario, config);
  const auto solos = solve_standalone(scenario);
  const auto& sizes = config.coalition_sizes;
  const int hours = scenario.hours();
  const int runs = config.runs;
  const std::size_t cells = sizes.size() * static_cast<std::size_t>(hours);
  constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

  struct Slot {
    std::vector<double> cen, dec;  // [size_index * hours + hour]; NaN = skip
    std::string error;
  };
  std::vector<Slot> slots(static_cast<std::size_t>(runs));

  const int threads = thread_cap();
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(threads)
#endif
  for (int run = 0; run < runs; ++run) {
    Slot& slot = slots[static_cast<std::size_t>(run)];
    slot.cen.assign(cells, kNan);
    slot.dec.assign(cells, kNan);
    try {
      const auto perm = seeded_permutation(
          scenario.households(),
          sub_seed(config.seed, kPermutationStream,
                   static_cast<std::uint64_t>(run)));
      for (std::size_t si = 0; si < sizes.size(); ++si) {
        const std::span<const int> members(perm.data(),
                                           static_cast<std::size_t>(sizes[si]));
        for (int h = 0; h < hours; ++h) {
          const Prices prices = scenario.tariff.at(h);
          double solo_sum = 0.0, solo_pay = 0.0, z_sum = 0.0;
          for (int k : members) {
            const Solo& solo = solos[static_cast<std::size_t>(h)]
                                    [static_cast<std::size_t>(k)];
            solo_sum += solo.welfare;
            solo_pay += payment(solo.sched.z, prices);
            z_sum += solo.sched.z;
          }
          if (std::abs(solo_sum) < kDegenerateWelfare) continue;  // stays NaN
          const double v_dec = solo_sum + (solo_pay - payment(z_sum, prices));
          const double v_cen =
              centralized_schedule(members_at(scenario, h, members), prices)
                  .schedule.welfare;
          const std::size_t cell = si * static_cast<std::size_t>(hours) +
                                   static_cast<std::size_t>(h);
          slot.dec[cell] = (v_dec - solo_sum) / solo_sum * 100.0;
          slot.cen[cell] = (v_cen - solo_sum) / solo_sum * 100.0;
        }
      }
    } catch (const std::exception& e) {
      std::ostringstream msg;
      msg << "welfare-gain run " << run << ": " << e.what();
      slot.error = msg.str();
    }
  }
  (void)threads;
  for (const auto& slot : slots)
    if (!slot.error.empty()) throw std::runtime_error(slot.error);

  // Serial reduction in run order: identical results at any thread count.
  WelfareGainReport report;
  report.seed = config.seed;
  report.digest = config_digest(config);
  report.runs = runs;
  for (std::size_t si = 0; si < sizes.size(); ++si) {
    std::vector<double> cen, dec;
    std::int64_t degenerate = 0;
    for (int run = 0; run < runs; ++run) {
      const Slot& slot = slots[static_cast<std::size_t>(run)];
      for (int h = 0; h < hours; ++h) {
        const std::size_t cell = si * static_cast<std::size_t>(hours) +
                                 static_cast<std::size_t>(h);
        if (std::isnan(slot.cen[cell])) {
          ++degenerate;
          continue;
        }
        cen.push_back(slot.cen[cell]);
        dec.push_back(slot.dec[cell]);
      }
    }
    for (Scheme scheme : {Scheme::Centralized, Scheme::Decentralized}) {
      const auto& xs = scheme == Scheme::Centralized ? cen : dec;
      GainStats stats;
      stats.size = sizes[si];
      stats.scheme = scheme;
      stats.samples = static_cast<std::int64_t>(xs.size());
      stats.degenerate_hours = degenerate;
      if (!xs.empty()) {
        double sum = 0.0;
        for (double x : xs) sum += x;
        stats.mean_gain_pct = sum / static_cast<double>(xs.size());
        stats.stdev_gain_pct = sample_stdev(xs, stats.mean_gain_pct);
      }
      report.stats.push_back(stats);
    }
  }
  if (config.details) {
    for (int run = 0; run < runs; ++run) {
      const Slot& slot = slots[static_cast<std::size_t>(run)];
      for (std::size_t si = 0; si < sizes.size(); ++si)
        for (int h = 0; h < hours; ++h) {
          const std::size_t cell = si * static_cast<std::size_t>(hours) +
                                   static_cast<std::size_t>(h);
          if (std::isnan(slot.cen[cell])) continue;
          report.details.push_back(
              {run, sizes[si], h, slot.cen[cell], slot.dec[cell]});
        }
    }
  }
  return report;
}

IrReport experiment_ir_violation(const Scenario& scenario,
                                 const ScenarioConfig& config,
                                 bool collect_player_gains) {
  validate_experiment(scenario, config);
  const auto mechanisms = resolved_mechanisms(config);
  const auto& sizes = config.coalition_sizes;
  const bool wants_shapley =
      std::find(mechanisms.begin(), mechanisms.end(), Mechanism::Shapley) !=
      mechanisms.end();
  if (wants_shapley)
    for (int s : sizes)
      if (s > 12)
        fail("experiment: shapley requested with coalition size > 12");

  const auto solos = solve_standalone(scenario);
  const int hours = scenario.hours();
  const int runs = config.runs;
  const std::size_t n_mech = mechanisms.size();
  const int largest = *std::max_element(sizes.begin(), sizes.end());
  const std::size_t largest_index = static_cast<std::size_t>(
      std::max_element(sizes.begin(), sizes.end()) - sizes.begin());

  struct Slot {
    std::vector<std::int64_t> violations;  // [(si*n_mech+mi)*2 + scheme]
    std::vector<double> psi_sum;           // [(member*n_mech+mi)*2 + scheme]
    std::vector<double> solo_sum;          // [member], largest size only
    std::vector<int> roster;               // household indices, largest size
    std::string error;
  };
  std::vector<Slot> slots(static_cast<std::size_t>(runs));
  auto vio_index = [n_mech](std::size_t si, std::size_t mi, int scheme_idx) {
    return (si * n_mech + mi) * 2 + static_cast<std::size_t>(scheme_idx);
  };

  const int threads = thread_cap();
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(threads)
#endif
  for (int run = 0; run < runs; ++run) {
    Slot& slot = slots[static_cast<std::size_t>(run)];
    slot.violations.assign(sizes.size() * n_mech * 2, 0);
    if (collect_player_gains) {
      slot.psi_sum.assign(static_cast<std::size_t>(largest) * n_mech * 2, 0.0);
      slot.solo_sum.assign(static_cast<std::size_t>(largest), 0.0);
    }
    try {
      const auto perm = seeded_permutation(
          scenario.households(),
          sub_seed(config.seed, kPermutationStream,
                   static_cast<std::uint64_t>(run)));
      slot.roster.assign(perm.begin(), perm.begin() + largest);
      for (std::size_t si = 0; si < sizes.size(); ++si) {
        const std::span<const int> members(perm.data(),
                                           static_cast<std::size_t>(sizes[si]));
        const bool tracked = collect_player_gains && si == largest_index;
        for (int h = 0; h < hours; ++h) {
          const AllocationContext ctx_dec = context_from_cache(
              scenario, solos, members, h, Scheme::Decentralized);
          const AllocationContext ctx_cen = context_from_cache(
              scenario, solos, members, h, Scheme::Centralized);
          if (tracked)
            for (std::size_t i = 0; i < members.size(); ++i)
              slot.solo_sum[i] += ctx_dec.standalone[i];
          for (std::size_t mi = 0; mi < n_mech; ++mi) {
            const Mechanism m = mechanisms[mi];
            if (m == Mechanism::Dnem) {
              const Allocation a =
                  dnem_allocation(ctx_dec.members, ctx_dec.prices, h);
              const auto v =
                  static_cast<std::int64_t>(a.ir_violations.size());
              slot.violations[vio_index(si, mi, 0)] += v;
              slot.violations[vio_index(si, mi, 1)] += v;
              if (tracked)
                for (std::size_t i = 0; i < members.size(); ++i)
                  for (int sc = 0; sc < 2; ++sc)
                    slot.psi_sum[(i * n_mech + mi) * 2 +
                                 static_cast<std::size_t>(sc)] += a.psi[i];
              continue;
            }
            for (int sc = 0; sc < 2; ++sc) {
              const auto& ctx = sc == 0 ? ctx_cen : ctx_dec;
              const Allocation a = allocate(ctx, m);
              slot.violations[vio_index(si, mi, sc)] +=
                  static_cast<std::int64_t>(a.ir_violations.size());
              if (tracked)
                for (std::size_t i = 0; i < members.size(); ++i)
                  slot.psi_sum[(i * n_mech + mi) * 2 +
                               static_cast<std::size_t>(sc)] += a.psi[i];
            }
          }
        }
      }
    } catch (const std::exception& e) {
      std::ostringstream msg;
      msg << "ir-violation run " << run << ": " << e.what();
      slot.error = msg.str();
    }
  }
  (void)threads;
  for (const auto& slot : slots)
    if (!slot.error.empty()) throw std::runtime_error(slot.error);

  IrReport report;
  report.seed = config.seed;
  report.digest = config_digest(config);
  report.runs = runs;
  for (std::size_t si = 0; si < sizes.size(); ++si)
    for (std::size_t mi = 0; mi < n_mech; ++mi)
      for (int sc = 0; sc < 2; ++sc) {
        IrStats stats;
        stats.size = sizes[si];
        stats.mechanism = mechanisms[mi];
        stats.scheme = sc == 0 ? Scheme::Centralized : Scheme::Decentralized;
        stats.total = static_cast<std::int64_t>(runs) * hours * sizes[si];
        for (int run = 0; run < runs; ++run)
          stats.violations +=
              slots[static_cast<std::size_t>(run)].violations[vio_index(
                  si, mi, sc)];
        report.stats.push_back(stats);
      }

  if (collect_player_gains) {
    for (int run = 0; run < runs; ++run) {
      const Slot& slot = slots[static_cast<std::size_t>(run)];
      for (std::size_t mi = 0; mi < n_mech; ++mi)
        for (int sc = 0; sc < 2; ++sc)
          for (int i = 0; i < largest; ++i) {
            const double solo = slot.solo_sum[static_cast<std::size_t>(i)];
            if (std::abs(solo) < kDegenerateWelfare) continue;
            const double psi =
                slot.psi_sum[(static_cast<std::size_t>(i) * n_mech + mi) * 2 +
                             static_cast<std::size_t>(sc)];
            PlayerGain row;
            row.player =
                scenario
                    .household_ids[static_cast<std::size_t>(slot.roster
                        [static_cast<std::size_t>(i)])];
            row.mechanism = mechanisms[mi];
            row.scheme = sc == 0 ? Scheme::Centralized : Scheme::Decentralized;
            row.day = run;
            row.gain_pct = (psi - solo) / std::abs(solo) * 100.0;
            report.player_gains.push_back(std::move(row));
          }
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// Report writers

std::string welfare_report_to_json(const WelfareGainReport& report) {
  json doc;
  doc["seed"] = report.seed;
  doc["config_digest"] = report.digest;
  doc["runs"] = report.runs;
  auto& stats = doc["stats"];
  stats = json::array();
  for (const auto& s : report.stats)
    stats.push_back({{"size", s.size},
                     {"scheme", scheme_name(s.scheme)},
                     {"mean_gain_pct", s.mean_gain_pct},
                     {"stdev_gain_pct", s.stdev_gain_pct},
                     {"samples", s.samples},
                     {"degenerate_hours", s.degenerate_hours}});
  if (!report.details.empty()) {
    auto& details = doc["details"];
    details = json::array();
    for (const auto& d : report.details)
      details.push_back({{"run", d.run},
                         {"size", d.size},
                         {"hour", d.hour},
                         {"gain_centralized_pct", d.gain_centralized_pct},
                         {"gain_decentralized_pct", d.gain_decentralized_pct}});
  }
  return doc.dump(2);
}

std::string welfare_report_to_csv(const WelfareGainReport& report) {
  std::string out =
      "size,scheme,mean_gain_pct,stdev_gain_pct,samples,degenerate_hours\n";
  for (const auto& s : report.stats) {
    out += std::to_string(s.size);
    out += ',';
    out += scheme_name(s.scheme);
    out += ',';
    out += fmt(s.mean_gain_pct);
    out += ',';
    out += fmt(s.stdev_gain_pct);
    out += ',';
    out += std::to_string(s.samples);
    out += ',';
    out += std::to_string(s.degenerate_hours);
    out += '\n';
  }
  return out;
}

std::string ir_report_to_json(const IrReport& report) {
  json doc;
  doc["seed"] = report.seed;
  doc["config_digest"] = report.digest;
  doc["runs"] = report.runs;
  auto& stats = doc["stats"];
  stats = json::array();
  for (const auto& s : report.stats)
    stats.push_back({{"size", s.size},
                     {"mechanism", mechanism_name(s.mechanism)},
                     {"scheme", scheme_name(s.scheme)},
                     {"violations", s.violations},
                     {"total", s.total},
                     {"violation_pct", s.pct()}});
  return doc.dump(2);
}

std::string ir_report_to_csv(const IrReport& report) {
  std::string out = "size,mechanism,scheme,violations,total,violation_pct\n";
  for (const auto& s : report.stats) {
    out += std::to_string(s.size);
    out += ',';
    out += mechanism_name(s.mechanism);
    out += ',';
    out += scheme_name(s.scheme);
    out += ',';
    out += std::to_string(s.violations);
    out += ',';
    out += std::to_string(s.total);
    out += ',';
    out += fmt(s.pct());
    out += '\n';
  }
  return out;
}

std::string player_gains_to_csv(const IrReport& report) {
  std::string out = "player,mechanism,scheme,day,gain_pct\n";
  for (const auto& g : report.player_gains) {
    out += g.player;
    out += ',';
    out += mechanism_name(g.mechanism);
    out += ',';
    out += scheme_name(g.scheme);
    out += ',';
    out += std::to_string(g.day);
    out += ',';
    out += fmt(g.gain_pct);
    out += '\n';
  }
  return out;
}

}  // namespace coopgrid
