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

#include <string>
#include <utility>
#include <vector>

#include "cran/common.hpp"
#include "cran/gp_core.hpp"
#include "cran/rate_model.hpp"
#include "cran/scenario.hpp"

namespace cran::sca {

inline constexpr double kRelaxedFloor = 1e-6;
inline constexpr double kPowerFloor = 1e-12;

/// Relaxed association state around which Step 1 is expanded.
struct Step1Iterate {
  Matrix alpha;  // R x N
  Matrix beta;   // R x B
  Vector y;      // R

  /// alpha = 1/R, beta = 1/B, y = 1.
  static Step1Iterate uniform(const Scenario& s);
  static Step1Iterate from_allocation(const Allocation& a);
  void validate(const Scenario& s) const;
};

struct Step2Iterate {
  Matrix power;  // R x N
};

/// Powers and SINRs seen by Step 1. Pairs without power get the probe power
/// that would meet the user's rate at the RRH's current load.
struct Step1Inputs {
  Matrix power;
  Matrix gamma;

  static Step1Inputs from_power(const Scenario& s, const Matrix& served_power);
};

struct AgmaWeights {
  Matrix lambda;  // R x N, rate terms of C2.1~ (0 when the term sits on the other side)
  Matrix phi;     // R x N, 1/ln2 terms of C2.1~
  Matrix kappa;   // R x N, -log2 N terms of C2.1~ (nonzero only when N < 1)
  Vector I_val;   // B, normalizer of C5.1~
  Vector psi;     // B
  std::vector<Matrix> xi;   // B of R x N
  std::vector<Matrix> rho;  // B of R x N, summed over the cubic terms of each pair
  Vector mu;      // R
  Vector varphi;  // R
};

/// Tangent of log2(sum_n alpha_{r,n}) at the previous row.
struct AffineLog {
  double at_prev = 0.0;  // log2 N_r(t-1)
  double slope = 0.0;    // 1 / (N_r(t-1) ln 2), same for every alpha_{r,n}
  double prev_sum = 0.0;

  double operator()(double row_sum) const { return at_prev + (row_sum - prev_sum) * slope; }
};

AffineLog dc_linearize_log_users(const Step1Iterate& prev, int r);

AgmaWeights compute_weights_step1(const Step1Iterate& prev, const Scenario& s, const Step1Inputs& in);

// Step 1 variable layout.
inline int alpha_id(const Scenario& s, int r, int n) { return r * s.num_users() + n; }
inline int beta_id(const Scenario& s, int r, int b) { return s.num_rrhs() * s.num_users() + r * s.num_bbus() + b; }
inline int y_id(const Scenario& s, int r) {
  return s.num_rrhs() * s.num_users() + s.num_rrhs() * s.num_bbus() + r;
}

gp::GpProgram build_step1_gp(const Scenario& s, const Step1Inputs& in, const Step1Iterate& prev);

/// Flattens an iterate into the Step 1 variable layout.
std::vector<double> step1_values(const Scenario& s, const Step1Iterate& it);

/// Reads alpha, beta, y back from a Step 1 solution vector.
Step1Iterate step1_from_values(const Scenario& s, const std::vector<double>& values);

/// Step 2 program over the powers of served pairs only.
struct Step2Gp {
  gp::GpProgram program;
  std::vector<std::pair<int, int>> served;  // (r, n) per variable

  Matrix power_from(const std::vector<double>& values, int R, int N) const;
  std::vector<double> start_from(const Matrix& power) const;
};

/// Without load_bound the per-BBU load constraints are left out.
Step2Gp build_step2_gp(const Scenario& s, const Allocation& fixed_assoc, const Step2Iterate& prev,
                       bool load_bound = true);

}  // namespace cran::sca
