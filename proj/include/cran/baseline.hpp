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

#include <vector>

#include "cran/solver.hpp"

namespace cran {

class InstanceTooLargeError : public Error {
 public:
  using Error::Error;
};

/// Power levels available to the brute-force oracle.
struct PowerGrid {
  std::vector<double> levels;  // strictly increasing, within [0, p_max], contains 0

  /// 0 plus `count` logarithmically spaced levels from lo to p_max.
  static PowerGrid log_spaced(int count, double lo, double p_max);
  void validate(double p_max) const;
};

/// Each user goes to the RRH with the largest SINR under P_ref; ties to the lowest index.
Matrix max_sinr_association(const Scenario& s, const Matrix& p_ref);

/// All RRHs on, association fixed by max SINR at uniform p_max/N powers.
Solution baseline_solve(const Scenario& s, const SolverConfig& cfg = {});

/// R^N * B^R * |grid|^N configurations at most.
double oracle_search_size(const Scenario& s, const PowerGrid& grid);

/// Exhaustive minimum-utility search. Throws InstanceTooLargeError above the
/// budget and InfeasibleError when nothing on the grid is feasible.
Solution brute_force_oracle(const Scenario& s, const PowerGrid& grid, double budget = 1e8);

}  // namespace cran
