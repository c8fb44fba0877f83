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

#include "cran/kernels.hpp"

#include <omp.h>

#include "cran/rate_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace cran::kernels {

void evaluate(const gp::LogFunction& f, std::span<const double> v, LocalDerivatives& out,
              bool with_hessian) {
  const int k = f.num_terms();
  const auto m = f.support.size();
  thread_local std::vector<double> z;
  z.resize(k);
  double mx = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < k; ++i) {
    double acc = f.log_coeff[i];
    for (int p = f.row_start[i]; p < f.row_start[i + 1]; ++p) acc += f.val[p] * v[f.col[p]];
    z[i] = acc;
    mx = std::max(mx, acc);
  }
  double sum = 0;
  for (int i = 0; i < k; ++i) {
    z[i] = std::exp(z[i] - mx);
    sum += z[i];
  }
  double lin = 0;
  for (const auto& [j, c] : f.shift) lin += c * v[j];
  out.value = mx + std::log(sum) + lin;

  // grad_A = sum_i pi_i a_i (curvature part), grad = grad_A + c
  out.grad.assign(m, 0.0);
  for (int i = 0; i < k; ++i) {
    const double pi = z[i] / sum;
    z[i] = pi;
    for (int p = f.row_start[i]; p < f.row_start[i + 1]; ++p) out.grad[f.local_col[p]] += pi * f.val[p];
  }
  if (with_hessian) {
    out.hess.assign(m * m, 0.0);
    for (int i = 0; i < k; ++i) {
      const double pi = z[i];
      for (int p = f.row_start[i]; p < f.row_start[i + 1]; ++p) {
        const double wp = pi * f.val[p];
        const auto row = static_cast<std::size_t>(f.local_col[p]) * m;
        for (int q = f.row_start[i]; q < f.row_start[i + 1]; ++q) out.hess[row + f.local_col[q]] += wp * f.val[q];
      }
    }
    for (std::size_t a = 0; a < m; ++a) {
      const double ga = out.grad[a];
      if (ga == 0.0) continue;
      for (std::size_t b = 0; b < m; ++b) out.hess[a * m + b] -= ga * out.grad[b];
    }
  }
  for (std::size_t p = 0; p < f.shift.size(); ++p) out.grad[f.shift_local[p]] += f.shift[p].second;
}

void evaluate_batch_serial(std::span<const gp::LogFunction> fs, std::span<const double> v,
                           std::vector<LocalDerivatives>& out, bool with_hessian) {
  out.resize(fs.size());
  for (std::size_t j = 0; j < fs.size(); ++j) evaluate(fs[j], v, out[j], with_hessian);
}

void evaluate_batch_omp(std::span<const gp::LogFunction> fs, std::span<const double> v,
                        std::vector<LocalDerivatives>& out, bool with_hessian) {
  out.resize(fs.size());
  const auto n = static_cast<long>(fs.size());
#pragma omp parallel for schedule(dynamic, 4)
  for (long j = 0; j < n; ++j) evaluate(fs[j], v, out[j], with_hessian);
}

void values_serial(std::span<const gp::LogFunction> fs, std::span<const double> v, std::vector<double>& out) {
  out.resize(fs.size());
  for (std::size_t j = 0; j < fs.size(); ++j) out[j] = fs[j].value(v);
}

void values_omp(std::span<const gp::LogFunction> fs, std::span<const double> v, std::vector<double>& out) {
  out.resize(fs.size());
  const auto n = static_cast<long>(fs.size());
#pragma omp parallel for schedule(dynamic, 4)
  for (long j = 0; j < n; ++j) out[j] = fs[j].value(v);
}

Matrix interference_matrix_omp(const Matrix& power, const Scenario& s) {
  const Eigen::Index R = power.rows(), N = power.cols();
  const Vector row_total = row_powers(power);
  Matrix out(R, N);
#pragma omp parallel for schedule(static)
  for (Eigen::Index n = 0; n < N; ++n)
    for (Eigen::Index r = 0; r < R; ++r) {
      double total = 0;
      for (Eigen::Index rp = 0; rp < R; ++rp)
        if (rp != r) total += (row_total[rp] - power(rp, n)) * s.gain(rp, n);
      out(r, n) = total;
    }
  return out;
}

int max_threads() { return omp_get_max_threads(); }

}  // namespace cran::kernels
