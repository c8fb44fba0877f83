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
#include <optional>
#include <string>
#include <vector>

#include "cran/rate_model.hpp"
#include "cran/sca.hpp"
#include "cran/scenario.hpp"

namespace cran {

enum class RoundingPolicy {
  argmax,       // per-user argmax only
  consolidate,  // argmax, then greedily switch RRHs off while utility drops
};

const char* to_string(RoundingPolicy p);
RoundingPolicy rounding_policy_from_string(const std::string& s);

struct SolverConfig {
  double eps1 = 1e-3;  // alpha
  double eps2 = 1e-3;  // beta
  double eps3 = 1e-3;  // y
  double eps4 = 1e-3;  // P
  int max_inner_iter = 20;
  int max_outer_iter = 50;
  double margin = 0.02;
  RoundingPolicy rounding = RoundingPolicy::consolidate;
  double tol_feas = 1e-9;
  double tol_opt = 1e-9;
  int gp_max_iter = 2000;
  bool parallel = false;

  void validate() const;
  gp::GpOptions gp_options() const;
};

struct InnerRecord {
  int outer = 0;
  int step = 0;  // 1 or 2
  int inner = 0;
  double objective = 0.0;
  double d_alpha = 0.0, d_beta = 0.0, d_y = 0.0, d_power = 0.0;
  std::string gp_status;
  bool accepted = true;
  bool converged = false;
};

struct OuterRecord {
  int outer = 0;
  double d_alpha = 0.0, d_beta = 0.0, d_y = 0.0, d_power = 0.0;
  bool converged = false;
};

struct SolveTrace {
  std::vector<InnerRecord> inner;
  std::vector<OuterRecord> outer;
  std::vector<std::string> log;  // rounding and repair events

  std::string to_csv() const;
  void write_csv(const std::filesystem::path& path) const;
};

struct Solution {
  Allocation allocation;
  double utility = 0.0;
  Vector rates;
  FeasibilityReport report;
  SolveTrace trace;
  double solve_time_ms = 0.0;
};

struct Step1Result {
  sca::Step1Iterate iterate;
  int iterations = 0;
  bool converged = false;
};

/// Inner SCA loop over the relaxed association with powers held fixed.
/// With beta_only, alpha and y stay pinned at their values in init.
Step1Result step1_solve(const Scenario& s, const sca::Step1Inputs& in, const sca::Step1Iterate& init,
                        const SolverConfig& cfg, SolveTrace* trace = nullptr, int outer = 0,
                        bool beta_only = false);

struct Step2Result {
  Matrix power;
  int iterations = 0;
  bool converged = false;
  bool feasible = true;
  bool load_bound_dropped = false;  // solved without the per-BBU load constraints
};

/// Inner SCA loop over the powers of a fixed integer association. When the
/// first subproblem is infeasible the loop restarts without the BBU load bound.
Step2Result step2_solve(const Scenario& s, const Allocation& assoc, const sca::Step2Iterate& init,
                        const SolverConfig& cfg, SolveTrace* trace = nullptr, int outer = 0);

/// Argmax rounding; the power matrix is copied through unchanged.
Allocation round_allocation(const sca::Step1Iterate& relaxed, const Matrix& power);

/// Smallest powers meeting every served user's exact rate at R (1 + margin),
/// or nullopt when the link gains cannot support it within p_max.
std::optional<Matrix> min_exact_power(const Scenario& s, const Allocation& a, double margin);

/// Reassigns active RRHs to BBUs so that exact-rate loads fit. Keeps the
/// current assignment when it already fits.
bool pack_bbus(const Scenario& s, Allocation& a);

/// Exact minimum powers at R (1 + margin), then BBU packing; nullopt unless the
/// result passes validate_solution. y is kept as given.
std::optional<Allocation> polish_allocation(const Scenario& s, const Allocation& a, double margin);

/// Throws InfeasibleError when no repair move is left.
Allocation repair_feasibility(const Scenario& s, const Allocation& a, const SolverConfig& cfg,
                              SolveTrace* trace = nullptr);

/// Greedy RRH switch-off starting from a feasible allocation.
Allocation consolidate(const Scenario& s, const Allocation& a, const Vector& y_relaxed, const SolverConfig& cfg,
                       SolveTrace* trace = nullptr);

Solution outer_solve(const Scenario& s, const SolverConfig& cfg = {});

/// Fills utility, rates and the feasibility report of an allocation.
Solution evaluate_solution(const Scenario& s, const Allocation& a);

}  // namespace cran
