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

// Benchmark: the OpenMP-parallel kernels against their serial reference
// implementations — powerset value tables for both schemes and one Monte
// Carlo experiment — and verify the outputs are identical bit for bit.

#include <cstdio>
#include <cstdlib>
#include <sstream>
#include <string>
#include <vector>

#include "coopgrid/game.hpp"
#include "coopgrid/harness.hpp"
#include "coopgrid/util.hpp"

#ifdef _OPENMP
#include <omp.h>
#else
#include <chrono>
#endif

namespace {

double now_seconds() {
#ifdef _OPENMP
  return omp_get_wtime();
#else
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
#endif
}

coopgrid::Scenario make_scenario(int count, int hours) {
  using namespace coopgrid;
  std::vector<double> retail(static_cast<std::size_t>(hours), 0.2);
  std::vector<double> export_rate(static_cast<std::size_t>(hours), 0.1);
  for (int h = 16; h < 21 && h < hours; ++h)
    retail[static_cast<std::size_t>(h)] = 0.4;
  ScenarioConfig config;
  config.tariff = TouTariff(std::move(retail), std::move(export_rate));
  SyntheticParams params;
  params.count = count;
  params.hours = hours;
  config.synthetic = params;
  config.seed = 42;
  return load_scenario(config);
}

bool identical(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] != b[i]) return false;
  return true;
}

void report(const char* name, double serial_s, double parallel_s, bool same) {
  std::printf("%-36s %10.1f ms %10.1f ms %6.2fx   identical: %s\n", name,
              serial_s * 1e3, parallel_s * 1e3, serial_s / parallel_s,
              same ? "yes" : "NO");
}

}  // namespace

int main() {
  using namespace coopgrid;

  std::printf("threads available: %d\n\n", thread_cap());
  std::printf("%-36s %13s %13s %8s\n", "kernel", "serial", "parallel",
              "speedup");

  {
    const Scenario sc = make_scenario(18, 1);
    const auto& members = sc.by_hour[0];
    const Prices prices = sc.tariff.at(0);
    const double t0 = now_seconds();
    const GameTable serial =
        build_table_serial(members, Scheme::Decentralized, prices, 0);
    const double t1 = now_seconds();
    const GameTable parallel =
        build_table(members, Scheme::Decentralized, prices, 0);
    const double t2 = now_seconds();
    report("decentralized table, 18 members", t1 - t0, t2 - t1,
           identical(serial.values, parallel.values));
  }

  {
    const Scenario sc = make_scenario(10, 1);
    const auto& members = sc.by_hour[0];
    const Prices prices = sc.tariff.at(0);
    const double t0 = now_seconds();
    const GameTable serial =
        build_table_serial(members, Scheme::Centralized, prices, 0);
    const double t1 = now_seconds();
    const GameTable parallel =
        build_table(members, Scheme::Centralized, prices, 0);
    const double t2 = now_seconds();
    report("centralized table, 10 members", t1 - t0, t2 - t1,
           identical(serial.values, parallel.values));
  }

  {
    const Scenario sc = make_scenario(10, 24);
    ScenarioConfig config;
    config.tariff = sc.tariff;
    SyntheticParams params;
    params.count = 10;
    params.hours = 24;
    config.synthetic = params;
    config.seed = 42;
    config.runs = 16;
    config.coalition_sizes = {4, 8};

    setenv("COOPGRID_THREADS", "1", 1);
    const double t0 = now_seconds();
    const WelfareGainReport serial = experiment_welfare_gain(sc, config);
    const double t1 = now_seconds();
    unsetenv("COOPGRID_THREADS");
    const double t2 = now_seconds();
    const WelfareGainReport parallel = experiment_welfare_gain(sc, config);
    const double t3 = now_seconds();
    const bool same =
        welfare_report_to_json(serial) == welfare_report_to_json(parallel);
    report("welfare-gain, 16 runs x 2 sizes", t1 - t0, t3 - t2, same);
  }

  return 0;
}
