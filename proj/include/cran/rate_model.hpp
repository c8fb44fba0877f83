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

#include "cran/common.hpp"
#include "cran/scenario.hpp"

namespace cran {

enum class AllocationMode { relaxed, integer };

/// Decision state of the joint problem.
struct Allocation {
  Matrix alpha;  // R x N user association
  Matrix beta;   // R x B RRH-to-BBU assignment
  Vector y;      // R on/off
  Matrix power;  // R x N transmit powers (Watt)
  AllocationMode mode = AllocationMode::integer;

  static Allocation zeros(const Scenario& s, AllocationMode mode = AllocationMode::integer);

  /// Serving RRH of user n, or -1 (integer mode).
  int server_of(int n) const;
  int bbu_of(int r) const;
  int active_rrh_count() const;
  /// Throws InvariantError when shapes disagree with the scenario.
  void check_shape(const Scenario& s) const;
  bool operator==(const Allocation& other) const;
};

/// N_r = sum_n alpha_{r,n}.
double users_on_rrh(const Allocation& a, int r);

/// I_{r,n} = sum_{r' != r} sum_{n' != n} p_{r',n'} h_{r',n}.
double interference(const Allocation& a, const Scenario& s, int r, int n);

/// Sum of row r of the power matrix, in column order.
double row_power(const Matrix& power, Eigen::Index r);
Vector row_powers(const Matrix& power);

/// Full R x N interference matrix (serial reference of the kernel).
Matrix interference_matrix(const Matrix& power, const Scenario& s);

/// p_{r,n} h_{r,n} / (sigma^2 + I_{r,n}).
double sinr(const Allocation& a, const Scenario& s, int r, int n);

/// Massive-MIMO rate log2(1 + (F-N+1)/N * SINR); 0 for unserved pairs.
double exact_rate(const Allocation& a, const Scenario& s, int r, int n);

/// High-SINR form log2(F/N * SINR).
double approx_rate(const Allocation& a, const Scenario& s, int r, int n);

/// Transmit power plus antenna cost of active RRHs.
double utility(const Allocation& a, const Scenario& s);

/// sum_{r,n} alpha_{r,n} p_{r,n}.
double radiated_power(const Allocation& a);

/// sum_{r,n} alpha_{r,n} exact_rate(r,n).
double total_throughput(const Allocation& a, const Scenario& s);

/// Throughput over utility (bps/Hz/Watt). Antenna cost is gated by y_r.
double energy_efficiency(const Allocation& a, const Scenario& s);

/// Per-user rate sum_r alpha_{r,n} exact_rate(r,n).
Vector user_rates(const Allocation& a, const Scenario& s);

}  // namespace cran
