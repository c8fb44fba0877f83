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

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cran/common.hpp"
#include "json.hpp"

namespace cran {

struct Point {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const Point&) const = default;
};

/// Parameters of a random problem instance. Powers in Watt, rates in bps/Hz.
struct ScenarioConfig {
  int num_rrhs = 5;
  int num_users = 20;
  int num_bbus = 2;
  double area_side = 4.0;
  std::array<int, 2> antennas_range{100, 200};
  std::array<double, 2> bbu_load_range{2.0, 24.0};
  double p_max = 40.0;
  double rate_req = 0.3;
  double noise_power = 1e-6;
  double cost_per_antenna = 0.25;
  /// Big-M of the on/off coupling; 0 means "use num_users".
  int omega = 0;
  double interference_threshold = 0.0;
  std::uint64_t rng_seed = 1;

  int effective_omega() const { return omega > 0 ? omega : num_users; }
  /// Throws InvariantError naming the first violated invariant.
  void validate() const;
  bool operator==(const ScenarioConfig&) const = default;
};

/// Immutable problem instance.
struct Scenario {
  ScenarioConfig config;
  std::vector<Point> rrh_positions;
  std::vector<Point> user_positions;
  std::vector<int> antennas;         // F_r
  std::vector<double> bbu_capacity;  // L_b^max
  std::vector<double> rate_req;      // R_n^rsv per user
  Matrix gain;                       // h_{r,n}, R x N

  int num_rrhs() const { return config.num_rrhs; }
  int num_users() const { return config.num_users; }
  int num_bbus() const { return config.num_bbus; }
  double noise() const { return config.noise_power; }

  void validate() const;
  bool operator==(const Scenario& other) const;
};

/// h = 1 / (1 + d^4).
double channel_gain(double distance);

/// Center RRH plus R-1 RRHs evenly spaced on a circle of radius side/3.
std::vector<Point> rrh_layout(int num_rrhs, double area_side);

Scenario generate_scenario(const ScenarioConfig& config);

/// Builds a scenario from explicit geometry; gains are derived from positions.
Scenario make_scenario(const ScenarioConfig& config, std::vector<Point> rrhs,
                       std::vector<Point> users, std::vector<int> antennas,
                       std::vector<double> bbu_capacity);

nlohmann::json config_to_json(const ScenarioConfig& config);
ScenarioConfig config_from_json(const nlohmann::json& j);

nlohmann::json scenario_to_json(const Scenario& s);
/// A bare config object is expanded with generate_scenario.
Scenario scenario_from_json(const nlohmann::json& j);

void save_scenario(const Scenario& s, const std::filesystem::path& path);
Scenario load_scenario(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Integer-solution feasibility under the exact rate model.

struct Allocation;

struct ConstraintCheck {
  std::string name;   // "C1".."C7"
  bool passed = true;
  double worst_slack = 0.0;  // largest violation amount, 0 when passed
  std::vector<std::string> violations;
};

struct FeasibilityReport {
  std::vector<ConstraintCheck> checks;
  bool feasible() const;
  const ConstraintCheck& check(const std::string& name) const;
  std::string summary() const;
};

/// Evaluates C1-C7 of the joint problem with exact rates. C6 is checked as
/// an equality: every active RRH must be attached to exactly one BBU.
FeasibilityReport validate_solution(const Scenario& s, const Allocation& a,
                                    double tol = 1e-9);

}  // namespace cran
