/*
 * SPDX-License-Identifier: Apache-2.0
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */


#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "cran/baseline.hpp"
#include "json.hpp"

namespace cran {

enum class SweepParam { users, rate };

const char* to_string(SweepParam p);
SweepParam sweep_param_from_string(const std::string& s);

struct SweepSpec {
  SweepParam param = SweepParam::users;
  std::vector<double> values;
  int seeds = 5;
  ScenarioConfig base;
  SolverConfig solver;
  std::filesystem::path out_dir;
  bool deterministic = false;  // write zero solve times so reruns are byte-identical

  void validate() const;
};

/// One (point, seed, algorithm) outcome. Metrics are NaN unless status is "ok".
struct ResultRow {
  double point = 0.0;
  std::uint64_t seed = 0;
  std::string algo;
  std::string status;
  double total_tx_power = 0.0;
  double throughput = 0.0;
  double ee = 0.0;
  int active_rrh_count = 0;
  double utility = 0.0;
  double solve_time_ms = 0.0;
};

struct AggregateRow {
  double point = 0.0;
  std::string algo;
  int runs = 0;
  int feasible = 0;
  double total_tx_power = 0.0;
  double throughput = 0.0;
  double ee = 0.0;
  double active_rrh_count = 0.0;
  double utility = 0.0;
  double solve_time_ms = 0.0;
};

struct SweepResult {
  SweepParam param = SweepParam::users;
  std::vector<ResultRow> rows;
  std::vector<AggregateRow> aggregate;
  std::vector<std::string> violations;  // rate sweep monotonicity reports
};

/// Scenario of a sweep point; the seed index offsets the base RNG seed.
ScenarioConfig point_config(const SweepSpec& spec, double value, int seed_index);

ResultRow row_from_solution(double point, std::uint64_t seed, const std::string& algo, const Scenario& s,
                            const Solution& sol);

SweepResult run_user_sweep(const SweepSpec& spec);
SweepResult run_rate_sweep(const SweepSpec& spec);
SweepResult run_sweep(const SweepSpec& spec);

std::vector<AggregateRow> aggregate_rows(const std::vector<ResultRow>& rows);

/// Mean proposed utility must not drop by more than rel_tol between consecutive points.
std::vector<std::string> monotonicity_violations(const std::vector<AggregateRow>& agg, double rel_tol = 0.02);

/// Nine significant digits.
std::string format_number(double v);

std::string results_csv(const std::vector<ResultRow>& rows, SweepParam param);
std::string aggregate_csv(const std::vector<AggregateRow>& agg, SweepParam param);
std::vector<ResultRow> parse_results_csv(const std::string& text);

/// Writes results.csv, aggregate.csv and, for rate sweeps, monotonicity.txt.
void write_sweep(const SweepResult& r, const std::filesystem::path& dir);

struct CompareRow {
  double point = 0.0;
  std::uint64_t seed = 0;
  std::string proposed_status, baseline_status;
  double proposed_utility = 0.0, baseline_utility = 0.0;
  double proposed_tx_power = 0.0, baseline_tx_power = 0.0;
  int proposed_active = 0, baseline_active = 0;
};

/// One row per (point, seed) present in the input.
std::vector<CompareRow> compare_rows(const std::vector<ResultRow>& rows);
std::string compare_csv(const std::vector<CompareRow>& rows, SweepParam param);

/// Per-allocation CSV: one row per served (rrh, user) pair.
std::string solution_csv(const Scenario& s, const Solution& sol);

std::string version_string();

/// Command, flags, config, seed, version, timestamps.
nlohmann::json make_manifest(const std::string& command, const nlohmann::json& args, const ScenarioConfig& config,
                             double wall_time_ms);
void write_json(const nlohmann::json& j, const std::filesystem::path& path);

}  // namespace cran
