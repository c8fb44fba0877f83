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

// Data-parallel inner loops. Each kernel has a serial reference and an
// OpenMP version that produces bit-identical results: work is split per
// output element and no floating-point reduction crosses threads.

#include <span>
#include <vector>

#include "cran/common.hpp"
#include "cran/gp_core.hpp"
#include "cran/scenario.hpp"

namespace cran::kernels {

/// Value, gradient and Hessian of one log-sum-exp function restricted to
/// its support variables. hess is row-major |support| x |support|.
struct LocalDerivatives {
  double value = 0.0;
  std::vector<double> grad;
  std::vector<double> hess;
};

void evaluate(const gp::LogFunction& f, std::span<const double> v, LocalDerivatives& out,
              bool with_hessian = true);

void evaluate_batch_serial(std::span<const gp::LogFunction> fs, std::span<const double> v,
                           std::vector<LocalDerivatives>& out, bool with_hessian = true);

void evaluate_batch_omp(std::span<const gp::LogFunction> fs, std::span<const double> v,
                        std::vector<LocalDerivatives>& out, bool with_hessian = true);

/// Values only; used by line searches.
void values_serial(std::span<const gp::LogFunction> fs, std::span<const double> v, std::vector<double>& out);
void values_omp(std::span<const gp::LogFunction> fs, std::span<const double> v, std::vector<double>& out);

/// OpenMP counterpart of cran::interference_matrix.
Matrix interference_matrix_omp(const Matrix& power, const Scenario& s);

int max_threads();

}  // namespace cran::kernels
