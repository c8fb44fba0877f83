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

#include "cran/rate_model.hpp"

#include <cmath>

namespace cran {

Allocation Allocation::zeros(const Scenario& s, AllocationMode mode) {
  const int R = s.num_rrhs(), N = s.num_users(), B = s.num_bbus();
  return Allocation{Matrix::Zero(R, N), Matrix::Zero(R, B), Vector::Zero(R), Matrix::Zero(R, N), mode};
}

int Allocation::server_of(int n) const {
  for (Eigen::Index r = 0; r < alpha.rows(); ++r)
    if (alpha(r, n) > 0.5) return static_cast<int>(r);
  return -1;
}

int Allocation::bbu_of(int r) const {
  for (Eigen::Index b = 0; b < beta.cols(); ++b)
    if (beta(r, b) > 0.5) return static_cast<int>(b);
  return -1;
}

int Allocation::active_rrh_count() const {
  int k = 0;
  for (Eigen::Index r = 0; r < y.size(); ++r) k += y[r] > 0.5 ? 1 : 0;
  return k;
}

void Allocation::check_shape(const Scenario& s) const {
  const int R = s.num_rrhs(), N = s.num_users(), B = s.num_bbus();
  if (alpha.rows() != R || alpha.cols() != N || power.rows() != R || power.cols() != N ||
      beta.rows() != R || beta.cols() != B || y.size() != R)
    throw InvariantError("allocation dimensions do not match the scenario");
}

bool Allocation::operator==(const Allocation& o) const {
  return mode == o.mode && alpha == o.alpha && beta == o.beta && y == o.y && power == o.power;
}

double users_on_rrh(const Allocation& a, int r) { return a.alpha.row(r).sum(); }

double row_power(const Matrix& power, Eigen::Index r) {
  double total = 0;
  for (Eigen::Index n = 0; n < power.cols(); ++n) total += power(r, n);
  return total;
}

Vector row_powers(const Matrix& power) {
  Vector out(power.rows());
  for (Eigen::Index r = 0; r < power.rows(); ++r) out[r] = row_power(power, r);
  return out;
}

double interference(const Allocation& a, const Scenario& s, int r, int n) {
  double total = 0;
  for (Eigen::Index rp = 0; rp < a.power.rows(); ++rp)
    if (rp != r) total += (row_power(a.power, rp) - a.power(rp, n)) * s.gain(rp, n);
  return total;
}

Matrix interference_matrix(const Matrix& power, const Scenario& s) {
  const Eigen::Index R = power.rows(), N = power.cols();
  const Vector row_total = row_powers(power);
  Matrix out(R, N);
  for (Eigen::Index n = 0; n < N; ++n)
    for (Eigen::Index r = 0; r < R; ++r) {
      double total = 0;
      for (Eigen::Index rp = 0; rp < R; ++rp)
        if (rp != r) total += (row_total[rp] - power(rp, n)) * s.gain(rp, n);
      out(r, n) = total;
    }
  return out;
}

double sinr(const Allocation& a, const Scenario& s, int r, int n) {
  return a.power(r, n) * s.gain(r, n) / (s.noise() + interference(a, s, r, n));
}

double exact_rate(const Allocation& a, const Scenario& s, int r, int n) {
  if (a.alpha(r, n) <= 0) return 0.0;
  const double Nr = users_on_rrh(a, r);
  const double F = s.antennas[r];
  if (Nr > F) throw ModelDomainError("N_r exceeds F_r on RRH " + std::to_string(r));
  const double factor = (F - Nr + 1.0) / Nr;
  return std::log2(1.0 + factor * sinr(a, s, r, n));
}

double approx_rate(const Allocation& a, const Scenario& s, int r, int n) {
  const double Nr = users_on_rrh(a, r);
  const double arg = s.antennas[r] / Nr * sinr(a, s, r, n);
  if (!(Nr > 0) || !(arg > 0)) throw ModelDomainError("approx_rate: nonpositive logarithm argument");
  return std::log2(arg);
}

double radiated_power(const Allocation& a) { return (a.alpha.array() * a.power.array()).sum(); }

double utility(const Allocation& a, const Scenario& s) {
  double antenna = 0;
  for (Eigen::Index r = 0; r < a.y.size(); ++r) antenna += a.y[r] * s.antennas[r];
  return radiated_power(a) + s.config.cost_per_antenna * antenna;
}

Vector user_rates(const Allocation& a, const Scenario& s) {
  const int R = s.num_rrhs(), N = s.num_users();
  Vector out = Vector::Zero(N);
  for (int n = 0; n < N; ++n)
    for (int r = 0; r < R; ++r)
      if (a.alpha(r, n) > 0) out[n] += a.alpha(r, n) * exact_rate(a, s, r, n);
  return out;
}

double total_throughput(const Allocation& a, const Scenario& s) { return user_rates(a, s).sum(); }

double energy_efficiency(const Allocation& a, const Scenario& s) {
  const double u = utility(a, s);
  if (!(u > 0)) throw ModelDomainError("energy efficiency undefined for zero utility");
  return total_throughput(a, s) / u;
}

}  // namespace cran
