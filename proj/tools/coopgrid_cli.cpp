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

// Command-line front end: solve one coalition, tabulate coalition values,
// run allocation mechanisms, check core membership, and drive the Monte
// Carlo experiments.  Exit codes: 0 success, 1 input error, 2 internal
// error.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "coopgrid/alloc.hpp"
#include "coopgrid/game.hpp"
#include "coopgrid/harness.hpp"
#include "coopgrid/solver.hpp"
#include "json.hpp"

namespace {

using namespace coopgrid;

struct CommonArgs {
  std::string config_path;
  int hour = 0;
  std::string scheme = "decentralized";
  std::string members;  // comma-separated household indices; empty = all
  std::string out;      // empty = stdout
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot open file: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_output(const std::string& out_path, const std::string& text) {
  if (out_path.empty()) {
    std::cout << text;
    if (text.empty() || text.back() != '\n') std::cout << '\n';
    return;
  }
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw std::invalid_argument("cannot open output file: " + out_path);
  out << text;
}

ScenarioConfig load_config(const std::string& path) {
  const std::string base_dir =
      std::filesystem::path(path).parent_path().string();
  return config_from_json(read_file(path), base_dir);
}

std::vector<int> parse_members(const std::string& text, int households) {
  std::vector<int> members;
  if (text.empty()) {
    for (int k = 0; k < households; ++k) members.push_back(k);
    return members;
  }
  std::istringstream in(text);
  std::string token;
  while (std::getline(in, token, ',')) {
    std::size_t pos = 0;
    int k = 0;
    try {
      k = std::stoi(token, &pos);
    } catch (const std::exception&) {
      pos = std::string::npos;
    }
    if (pos != token.size())
      throw std::invalid_argument("--members: bad index '" + token + "'");
    if (k < 0 || k >= households)
      throw std::invalid_argument(
          "--members: index " + std::to_string(k) + " outside 0.." +
          std::to_string(households - 1));
    if (std::find(members.begin(), members.end(), k) != members.end())
      throw std::invalid_argument("--members: duplicate index " + token);
    members.push_back(k);
  }
  if (members.empty()) throw std::invalid_argument("--members: empty list");
  return members;
}

std::vector<Prosumer> select_members(const Scenario& scenario, int hour,
                                     const std::string& members_arg) {
  if (hour < 0 || hour >= scenario.hours())
    throw std::invalid_argument("--hour outside the tariff horizon");
  std::vector<Prosumer> subset;
  for (int k : parse_members(members_arg, scenario.households()))
    subset.push_back(scenario.by_hour[static_cast<std::size_t>(hour)]
                                     [static_cast<std::size_t>(k)]);
  return subset;
}

nlohmann::json member_json(const Prosumer& prosumer,
                           const MemberSchedule& sched) {
  nlohmann::json entry;
  entry["id"] = prosumer.id;
  entry["d"] = sched.d;
  entry["z"] = sched.z;
  return entry;
}

int cmd_solve(const CommonArgs& args) {
  const ScenarioConfig config = load_config(args.config_path);
  const Scenario scenario = load_scenario(config);
  const auto subset = select_members(scenario, args.hour, args.members);
  const Prices prices = scenario.tariff.at(args.hour);
  const Scheme scheme = scheme_from_name(args.scheme);

  nlohmann::json doc;
  doc["scheme"] = args.scheme;
  doc["hour"] = args.hour;
  auto& members = doc["members"];
  members = nlohmann::json::array();
  if (scheme == Scheme::Centralized) {
    const RegimeSolution solved = centralized_schedule(subset, prices);
    doc["regime"] = regime_name(solved.regime);
    doc["mu"] = solved.schedule.mu;
    doc["welfare"] = solved.schedule.welfare;
    doc["net_total"] = solved.schedule.net_total();
    for (std::size_t i = 0; i < subset.size(); ++i)
      members.push_back(member_json(subset[i], solved.schedule.members[i]));
  } else {
    double welfare = 0.0, bills = 0.0, z_total = 0.0;
    std::vector<nlohmann::json> rows;
    for (const auto& prosumer : subset) {
      const RegimeSolution solo = best_response(prosumer, prices);
      const MemberSchedule& sched = solo.schedule.members.at(0);
      auto entry = member_json(prosumer, sched);
      entry["regime"] = regime_name(solo.regime);
      entry["mu"] = solo.schedule.mu;
      members.push_back(std::move(entry));
      welfare += solo.schedule.welfare;
      bills += payment(sched.z, prices);
      z_total += sched.z;
    }
    // Members schedule on their own; the coalition pools the bill.
    doc["welfare"] = welfare + (bills - payment(z_total, prices));
    doc["net_total"] = z_total;
  }
  write_output(args.out, doc.dump(2));
  return 0;
}

int cmd_values(const CommonArgs& args) {
  const ScenarioConfig config = load_config(args.config_path);
  const Scenario scenario = load_scenario(config);
  const auto subset = select_members(scenario, args.hour, args.members);
  const GameTable table =
      build_table(subset, scheme_from_name(args.scheme),
                  scenario.tariff.at(args.hour), args.hour);
  write_output(args.out, table_to_json(table));
  return 0;
}

int cmd_allocate(const CommonArgs& args, const std::string& mechanism) {
  const ScenarioConfig config = load_config(args.config_path);
  const Scenario scenario = load_scenario(config);
  const auto subset = select_members(scenario, args.hour, args.members);
  const AllocationContext ctx =
      make_context(subset, scheme_from_name(args.scheme),
                   scenario.tariff.at(args.hour), args.hour);
  const Allocation allocation =
      allocate(ctx, mechanism_from_name(mechanism));
  write_output(args.out, allocation_to_json(allocation));
  return 0;
}

int cmd_check_core(const CommonArgs& args, const std::string& table_path,
                   const std::string& mechanism) {
  const ScenarioConfig config = load_config(args.config_path);
  const Scenario scenario = load_scenario(config);
  const auto subset = select_members(scenario, args.hour, args.members);
  const Prices prices = scenario.tariff.at(args.hour);
  const Scheme scheme = scheme_from_name(args.scheme);

  GameTable table;
  if (!table_path.empty()) {
    table = table_from_json(read_file(table_path));
    if (table.num_players != static_cast<int>(subset.size()))
      throw std::invalid_argument(
          "--table: player count does not match the selected members");
  } else {
    table = build_table(subset, scheme, prices, args.hour);
  }

  std::ostringstream out;
  const CoreCertificate cert = core_nonempty(table);
  out << "least-core epsilon: " << cert.epsilon << "\n";
  out << "core nonempty: " << (cert.nonempty ? "true" : "false") << "\n";
  out << "certificate:";
  for (double v : cert.payoffs) out << ' ' << v;
  out << "\n";
  if (!mechanism.empty()) {
    const AllocationContext ctx = make_context(subset, scheme, prices, args.hour);
    const Allocation allocation = allocate(ctx, mechanism_from_name(mechanism));
    const CoreCheck check = in_core(allocation.psi, table);
    out << "mechanism " << mechanism << " in core: "
        << (check.ok ? "true" : "false") << "\n";
    if (!check.imputation.ok)
      for (const auto& reason : check.imputation.reasons)
        out << "  " << reason << "\n";
    for (std::uint32_t mask : check.violated)
      out << "  blocked by coalition mask " << mask << "\n";
  }
  write_output(args.out, out.str());
  return 0;
}

struct ExperimentArgs {
  CommonArgs common;
  std::optional<int> runs;
  std::optional<std::uint64_t> seed;
  std::string format = "json";
  std::string player_gains;  // ir-violation only
};

ScenarioConfig experiment_config(const ExperimentArgs& args) {
  ScenarioConfig config = load_config(args.common.config_path);
  if (args.runs) config.runs = *args.runs;
  if (args.seed) config.seed = *args.seed;
  return config;
}

int cmd_welfare_gain(const ExperimentArgs& args) {
  const ScenarioConfig config = experiment_config(args);
  const Scenario scenario = load_scenario(config);
  const WelfareGainReport report = experiment_welfare_gain(scenario, config);
  write_output(args.common.out, args.format == "csv"
                                    ? welfare_report_to_csv(report)
                                    : welfare_report_to_json(report));
  return 0;
}

int cmd_ir_violation(const ExperimentArgs& args) {
  const ScenarioConfig config = experiment_config(args);
  const Scenario scenario = load_scenario(config);
  const IrReport report = experiment_ir_violation(
      scenario, config, !args.player_gains.empty());
  write_output(args.common.out, args.format == "csv"
                                    ? ir_report_to_csv(report)
                                    : ir_report_to_json(report));
  if (!args.player_gains.empty())
    write_output(args.player_gains, player_gains_to_csv(report));
  return 0;
}

void add_common_options(CLI::App* cmd, CommonArgs& args,
                        bool with_selection = true) {
  cmd->add_option("--config", args.config_path, "scenario config JSON")
      ->required();
  cmd->add_option("--out", args.out, "output file (default: stdout)");
  if (with_selection) {
    cmd->add_option("--hour", args.hour, "tariff hour (default 0)");
    cmd->add_option("--scheme", args.scheme,
                    "centralized | decentralized (default decentralized)")
        ->check(CLI::IsMember({"centralized", "decentralized"}));
    cmd->add_option("--members", args.members,
                    "comma-separated household indices (default: all)");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"energy-community coalition toolkit"};
  app.require_subcommand(1);

  CommonArgs solve_args;
  auto* solve_cmd =
      app.add_subcommand("solve", "solve one coalition at one hour");
  add_common_options(solve_cmd, solve_args);

  CommonArgs values_args;
  auto* values_cmd = app.add_subcommand(
      "values", "tabulate coalition values over the powerset");
  add_common_options(values_cmd, values_args);

  CommonArgs allocate_args;
  std::string allocate_mechanism;
  auto* allocate_cmd =
      app.add_subcommand("allocate", "run one allocation mechanism");
  add_common_options(allocate_cmd, allocate_args);
  allocate_cmd
      ->add_option("--mechanism", allocate_mechanism,
                   "equal_division | egalitarian | proportional | "
                   "net_consumption | shapley | dnem")
      ->required();

  CommonArgs core_args;
  std::string core_table, core_mechanism;
  auto* core_cmd = app.add_subcommand(
      "check-core", "least-core certificate and core membership");
  add_common_options(core_cmd, core_args);
  core_cmd->add_option("--table", core_table,
                       "cached game table JSON (skips rebuilding)");
  core_cmd->add_option("--mechanism", core_mechanism,
                       "also check this mechanism's allocation");

  auto* experiment_cmd =
      app.add_subcommand("experiment", "Monte Carlo experiments");
  experiment_cmd->require_subcommand(1);

  ExperimentArgs wg_args;
  auto* wg_cmd = experiment_cmd->add_subcommand(
      "welfare-gain", "welfare gain vs coalition size");
  add_common_options(wg_cmd, wg_args.common, /*with_selection=*/false);
  wg_cmd->add_option("--runs", wg_args.runs, "override config run count");
  wg_cmd->add_option("--seed", wg_args.seed, "override config seed");
  wg_cmd->add_option("--format", wg_args.format, "json | csv")
      ->check(CLI::IsMember({"json", "csv"}));

  ExperimentArgs ir_args;
  auto* ir_cmd = experiment_cmd->add_subcommand(
      "ir-violation", "individual-rationality violation rates");
  add_common_options(ir_cmd, ir_args.common, /*with_selection=*/false);
  ir_cmd->add_option("--runs", ir_args.runs, "override config run count");
  ir_cmd->add_option("--seed", ir_args.seed, "override config seed");
  ir_cmd->add_option("--format", ir_args.format, "json | csv")
      ->check(CLI::IsMember({"json", "csv"}));
  ir_cmd->add_option("--player-gains", ir_args.player_gains,
                     "also write tidy per-player daily gains CSV here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (solve_cmd->parsed()) return cmd_solve(solve_args);
    if (values_cmd->parsed()) return cmd_values(values_args);
    if (allocate_cmd->parsed())
      return cmd_allocate(allocate_args, allocate_mechanism);
    if (core_cmd->parsed())
      return cmd_check_core(core_args, core_table, core_mechanism);
    if (wg_cmd->parsed()) return cmd_welfare_gain(wg_args);
    if (ir_cmd->parsed()) return cmd_ir_violation(ir_args);
    std::cerr << "error: no subcommand\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 2;
  }
}
