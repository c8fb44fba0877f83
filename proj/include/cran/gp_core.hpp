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

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cran/common.hpp"
#include "json.hpp"

namespace cran::gp {

using VarId = int;

/// c * prod_v x_v^{a_v} with c > 0. The coefficient is held in log form so
/// products over many factors stay representable.
class Monomial {
 public:
  using Exponents = std::vector<std::pair<VarId, double>>;

  explicit Monomial(double coefficient = 1.0);
  static Monomial from_log(double log_coefficient);
  static Monomial variable(VarId v, double exponent = 1.0, double coefficient = 1.0);

  double coefficient() const;
  double log_coefficient() const { return log_c_; }
  const Exponents& exponents() const { return exps_; }
  double exponent(VarId v) const;
  bool is_constant() const { return exps_.empty(); }

  Monomial& operator*=(const Monomial& other);
  Monomial& scale(double factor);
  Monomial pow(double e) const;
  Monomial inverse() const { return pow(-1.0); }

 private:
  void add_exponent(VarId v, double e);

  double log_c_ = 0.0;
  Exponents exps_;  // sorted by variable, no zero entries
};

Monomial operator*(Monomial a, const Monomial& b);

/// Nonempty sum of monomials.
class Posynomial {
 public:
  Posynomial() = default;
  Posynomial(Monomial m) { terms_.push_back(std::move(m)); }  // NOLINT(implicit)

  const std::vector<Monomial>& terms() const { return terms_; }
  std::size_t size() const { return terms_.size(); }
  bool empty() const { return terms_.empty(); }

  Posynomial& operator+=(const Monomial& m);
  Posynomial& operator+=(const Posynomial& p);
  Posynomial& operator*=(const Monomial& m);
  Posynomial operator*(const Posynomial& other) const;

 private:
  std::vector<Monomial> terms_;
};

Posynomial operator+(Posynomial a, const Posynomial& b);
Posynomial operator*(Posynomial a, const Monomial& m);

/// Throws std::invalid_argument on a missing or nonpositive assignment.
double eval(const Monomial& m, std::span<const double> x);
double eval(const Posynomial& p, std::span<const double> x);

struct AgmaResult {
  Monomial monomial;
  std::vector<double> weights;  // one per term, sum to 1
};

/// Best local monomial lower bound of g at x0: prod_i (u_i(x)/w_i)^{w_i} with
/// w_i = u_i(x0)/g(x0). Exact at x0 and below g everywhere.
AgmaResult agma_monomialize(const Posynomial& g, std::span<const double> x0);

struct Bounds {
  double lo = 0.0;
  double hi = 0.0;
};

/// min objective s.t. ineq <= 1, eq == 1, lo <= x <= hi.
class GpProgram {
 public:
  struct Inequality {
    Posynomial lhs;
    std::string label;
  };
  struct Equality {
    Monomial lhs;
    std::string label;
  };

  VarId add_variable(std::string name, double lo, double hi);
  void set_bounds(VarId v, double lo, double hi);
  void set_objective(Posynomial objective) { objective_ = std::move(objective); }
  void add_constraint(Posynomial lhs, std::string label = {});
  void add_equality(Monomial lhs, std::string label = {});

  int num_variables() const { return static_cast<int>(names_.size()); }
  const std::string& name(VarId v) const { return names_.at(v); }
  const Bounds& bounds(VarId v) const { return bounds_.at(v); }
  const std::vector<Bounds>& all_bounds() const { return bounds_; }
  const Posynomial& objective() const { return objective_; }
  const std::vector<Inequality>& inequalities() const { return ineqs_; }
  const std::vector<Equality>& equalities() const { return eqs_; }
  std::size_t total_terms() const;

  /// Checks positivity of bounds and that every referenced variable exists.
  void validate() const;
  nlohmann::json to_json() const;

 private:
  std::vector<std::string> names_;
  std::vector<Bounds> bounds_;
  Posynomial objective_;
  std::vector<Inequality> ineqs_;
  std::vector<Equality> eqs_;
};

// ---------------------------------------------------------------------------
// Log-domain form: x = exp(v).

/// f(v) = log sum_i exp(a_i . v + b_i) + c . v. The shared part c is factored
/// out of the terms so each row of A stays sparse.
struct LogFunction {
  std::vector<int> row_start;  // size terms+1
  std::vector<int> col;
  std::vector<double> val;
  std::vector<double> log_coeff;           // b_i
  std::vector<std::pair<int, double>> shift;  // c, sorted by variable
  std::vector<int> support;                // sorted union of referenced variables
  std::vector<int> local_col;              // col mapped into support positions
  std::vector<int> shift_local;

  int num_terms() const { return static_cast<int>(log_coeff.size()); }
  double value(std::span<const double> v) const;
  void finalize();  // rebuilds support
};

LogFunction log_function(const Posynomial& p);

struct ConvexProgram {
  int num_vars = 0;
  LogFunction objective;
  std::vector<LogFunction> inequalities;  // f_j(v) <= 0
  std::vector<std::pair<std::vector<std::pair<int, double>>, double>> equalities;  // a.v + b == 0
  std::vector<double> lo, hi;             // log bounds
};

/// Exact substitution x = exp(v).
ConvexProgram log_transform(const GpProgram& gp);

// ---------------------------------------------------------------------------
// Solver

enum class GpStatus { optimal, max_iterations, infeasible };

const char* to_string(GpStatus s);

struct GpOptions {
  double tol_feas = 1e-9;
  double tol_opt = 1e-9;
  int max_iter = 2000;  // Newton steps over all phases
  bool parallel = false;
};

struct GpSolution {
  std::vector<double> values;
  double objective_value = 0.0;
  GpStatus status = GpStatus::max_iterations;
  double feasibility_residual = 0.0;
  double stationarity_residual = 0.0;
  int newton_steps = 0;
};

/// Deterministic barrier interior-point solve of the log-domain program. A
/// start point is used as a warm start when it is strictly feasible.
GpSolution solve(const GpProgram& gp, const GpOptions& options = {},
                 std::optional<std::span<const double>> start = std::nullopt);

/// max over inequalities of max(0, value - 1), bounds included.
double feasibility_residual(const GpProgram& gp, std::span<const double> x);

}  // namespace cran::gp
