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

#include "cran/gp_core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

namespace cran::gp {

Monomial::Monomial(double coefficient) {
  if (!(coefficient > 0) || !std::isfinite(coefficient))
    throw std::invalid_argument("monomial coefficient must be positive and finite");
  log_c_ = std::log(coefficient);
}

Monomial Monomial::from_log(double log_coefficient) {
  if (!std::isfinite(log_coefficient)) throw std::invalid_argument("monomial log-coefficient must be finite");
  Monomial m;
  m.log_c_ = log_coefficient;
  return m;
}

Monomial Monomial::variable(VarId v, double exponent, double coefficient) {
  Monomial m(coefficient);
  m.add_exponent(v, exponent);
  return m;
}

double Monomial::coefficient() const { return std::exp(log_c_); }

double Monomial::exponent(VarId v) const {
  auto it = std::lower_bound(exps_.begin(), exps_.end(), v,
                             [](const auto& e, VarId id) { return e.first < id; });
  return (it != exps_.end() && it->first == v) ? it->second : 0.0;
}

void Monomial::add_exponent(VarId v, double e) {
  if (v < 0) throw std::invalid_argument("negative variable id");
  auto it = std::lower_bound(exps_.begin(), exps_.end(), v,
                             [](const auto& x, VarId id) { return x.first < id; });
  if (it != exps_.end() && it->first == v) {
    it->second += e;
    if (it->second == 0.0) exps_.erase(it);
  } else if (e != 0.0) {
    exps_.insert(it, {v, e});
  }
}

Monomial& Monomial::operator*=(const Monomial& other) {
  log_c_ += other.log_c_;
  for (const auto& [v, e] : other.exps_) add_exponent(v, e);
  return *this;
}

Monomial& Monomial::scale(double factor) {
  if (!(factor > 0)) throw std::invalid_argument("monomial scale must be positive");
  log_c_ += std::log(factor);
  return *this;
}

Monomial Monomial::pow(double e) const {
  Monomial out = *this;
  out.log_c_ *= e;
  out.exps_.clear();
  if (e == 0.0) return out;
  for (const auto& [v, a] : exps_) out.exps_.emplace_back(v, a * e);
  return out;
}

Monomial operator*(Monomial a, const Monomial& b) { return a *= b; }

Posynomial& Posynomial::operator+=(const Monomial& m) {
  terms_.push_back(m);
  return *this;
}

Posynomial& Posynomial::operator+=(const Posynomial& p) {
  terms_.insert(terms_.end(), p.terms_.begin(), p.terms_.end());
  return *this;
}

Posynomial& Posynomial::operator*=(const Monomial& m) {
  for (auto& t : terms_) t *= m;
  return *this;
}

Posynomial Posynomial::operator*(const Posynomial& other) const {
  Posynomial out;
  for (const auto& a : terms_)
    for (const auto& b : other.terms_) out += a * b;
  return out;
}

Posynomial operator+(Posynomial a, const Posynomial& b) { return a += b; }
Posynomial operator*(Posynomial a, const Monomial& m) { return a *= m; }

namespace {

double log_eval(const Monomial& m, std::span<const double> x) {
  double acc = m.log_coefficient();
  for (const auto& [v, e] : m.exponents()) {
    if (static_cast<std::size_t>(v) >= x.size())
      throw std::invalid_argument("no assignment for variable " + std::to_string(v));
    if (!(x[v] > 0)) throw std::invalid_argument("nonpositive assignment for variable " + std::to_string(v));
    acc += e * std::log(x[v]);
  }
  return acc;
}

}  // namespace

double eval(const Monomial& m, std::span<const double> x) { return std::exp(log_eval(m, x)); }

double eval(const Posynomial& p, std::span<const double> x) {
  if (p.empty()) throw std::invalid_argument("empty posynomial");
  double total = 0;
  for (const auto& t : p.terms()) total += eval(t, x);
  return total;
}

AgmaResult agma_monomialize(const Posynomial& g, std::span<const double> x0) {
  if (g.empty()) throw std::invalid_argument("agma of an empty posynomial");
  const std::size_t k = g.size();
  std::vector<double> logs(k);
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < k; ++i) {
    logs[i] = log_eval(g.terms()[i], x0);
    mx = std::max(mx, logs[i]);
  }
  double sum = 0;
  for (double l : logs) sum += std::exp(l - mx);
  const double log_g = mx + std::log(sum);

  AgmaResult out;
  out.weights.resize(k);
  out.monomial = Monomial::from_log(0.0);
  // (u_i / w_i)^{w_i}; w_i = u_i(x0)/g(x0) in log form.
  for (std::size_t i = 0; i < k; ++i) {
    const double log_w = logs[i] - log_g;
    const double w = std::exp(log_w);
    out.weights[i] = w;
    if (w == 0.0) continue;
    Monomial factor = g.terms()[i].pow(w);
    out.monomial *= factor;
    out.monomial *= Monomial::from_log(-w * log_w);
  }
  return out;
}

// ---------------------------------------------------------------------------

VarId GpProgram::add_variable(std::string name, double lo, double hi) {
  names_.push_back(std::move(name));
  bounds_.push_back({lo, hi});
  return static_cast<VarId>(names_.size() - 1);
}

void GpProgram::set_bounds(VarId v, double lo, double hi) { bounds_.at(v) = {lo, hi}; }

void GpProgram::add_constraint(Posynomial lhs, std::string label) {
  if (lhs.empty()) throw std::invalid_argument("empty constraint posynomial");
  ineqs_.push_back({std::move(lhs), std::move(label)});
}

void GpProgram::add_equality(Monomial lhs, std::string label) {
  eqs_.push_back({std::move(lhs), std::move(label)});
}

std::size_t GpProgram::total_terms() const {
  std::size_t n = objective_.size();
  for (const auto& c : ineqs_) n += c.lhs.size();
  return n + eqs_.size();
}

void GpProgram::validate() const {
  if (objective_.empty()) throw InvariantError("GP objective is empty");
  for (const auto& b : bounds_)
    if (!(b.lo > 0) || !std::isfinite(b.hi)) throw InvariantError("GP variable bounds must be positive and finite");
  const auto nv = num_variables();
  auto check = [nv](const Monomial& m) {
    for (const auto& [v, e] : m.exponents())
      if (v >= nv) throw InvariantError("GP references undeclared variable " + std::to_string(v));
  };
  for (const auto& t : objective_.terms()) check(t);
  for (const auto& c : ineqs_)
    for (const auto& t : c.lhs.terms()) check(t);
  for (const auto& e : eqs_) check(e.lhs);
}

namespace {

nlohmann::json monomial_json(const Monomial& m, const GpProgram& gp) {
  nlohmann::json e = nlohmann::json::object();
  for (const auto& [v, a] : m.exponents()) e[gp.name(v)] = a;
  return {{"log_coefficient", m.log_coefficient()}, {"exponents", e}};
}

nlohmann::json posy_json(const Posynomial& p, const GpProgram& gp) {
  nlohmann::json a = nlohmann::json::array();
  for (const auto& t : p.terms()) a.push_back(monomial_json(t, gp));
  return a;
}

}  // namespace

nlohmann::json GpProgram::to_json() const {
  nlohmann::json vars = nlohmann::json::array();
  for (std::size_t i = 0; i < names_.size(); ++i)
    vars.push_back({{"name", names_[i]}, {"lo", bounds_[i].lo}, {"hi", bounds_[i].hi}});
  nlohmann::json cons = nlohmann::json::array();
  for (const auto& c : ineqs_) cons.push_back({{"label", c.label}, {"terms", posy_json(c.lhs, *this)}});
  nlohmann::json eqs = nlohmann::json::array();
  for (const auto& e : eqs_) eqs.push_back({{"label", e.label}, {"monomial", monomial_json(e.lhs, *this)}});
  return {{"variables", vars}, {"objective", posy_json(objective_, *this)},
          {"inequalities", cons}, {"equalities", eqs}};
}

// ---------------------------------------------------------------------------

double LogFunction::value(std::span<const double> v) const {
  const int k = num_terms();
  double mx = -std::numeric_limits<double>::infinity();
  thread_local std::vector<double> z;
  z.resize(k);
  for (int i = 0; i < k; ++i) {
    double acc = log_coeff[i];
    for (int p = row_start[i]; p < row_start[i + 1]; ++p) acc += val[p] * v[col[p]];
    z[i] = acc;
    mx = std::max(mx, acc);
  }
  double sum = 0;
  for (int i = 0; i < k; ++i) sum += std::exp(z[i] - mx);
  double lin = 0;
  for (const auto& [j, c] : shift) lin += c * v[j];
  return mx + std::log(sum) + lin;
}

void LogFunction::finalize() {
  support.assign(col.begin(), col.end());
  for (const auto& s : shift) support.push_back(s.first);
  std::sort(support.begin(), support.end());
  support.erase(std::unique(support.begin(), support.end()), support.end());
  auto local = [this](int v) {
    return static_cast<int>(std::lower_bound(support.begin(), support.end(), v) - support.begin());
  };
  local_col.resize(col.size());
  for (std::size_t p = 0; p < col.size(); ++p) local_col[p] = local(col[p]);
  shift_local.resize(shift.size());
  for (std::size_t p = 0; p < shift.size(); ++p) shift_local[p] = local(shift[p].first);
}

LogFunction log_function(const Posynomial& p) {
  LogFunction f;
  const auto& terms = p.terms();
  const int k = static_cast<int>(terms.size());

  // Most frequent exponent per variable (absent counts as 0) is shared by
  // enough terms to be pulled out as an affine shift.
  std::map<VarId, std::map<double, int>> counts;
  for (const auto& t : terms)
    for (const auto& [v, e] : t.exponents()) ++counts[v][e];
  std::map<VarId, double> common;
  for (const auto& [v, hist] : counts) {
    int present = 0;
    for (const auto& [e, c] : hist) present += c;
    double best_e = 0.0;
    int best_c = k - present;
    for (const auto& [e, c] : hist)
      if (c > best_c) best_e = e, best_c = c;
    if (best_e != 0.0) common[v] = best_e;
  }

  f.row_start.push_back(0);
  for (const auto& t : terms) {
    auto cit = common.begin();
    for (const auto& [v, e] : t.exponents()) {
      while (cit != common.end() && cit->first < v) {
        f.col.push_back(cit->first);
        f.val.push_back(-cit->second);
        ++cit;
      }
      double residual = e;
      if (cit != common.end() && cit->first == v) residual -= cit++->second;
      if (residual != 0.0) {
        f.col.push_back(v);
        f.val.push_back(residual);
      }
    }
    for (; cit != common.end(); ++cit) {
      f.col.push_back(cit->first);
      f.val.push_back(-cit->second);
    }
    f.log_coeff.push_back(t.log_coefficient());
    f.row_start.push_back(static_cast<int>(f.col.size()));
  }
  for (const auto& [v, e] : common) f.shift.emplace_back(v, e);
  f.finalize();
  return f;
}

ConvexProgram log_transform(const GpProgram& gp) {
  gp.validate();
  ConvexProgram cp;
  cp.num_vars = gp.num_variables();
  cp.objective = log_function(gp.objective());
  for (const auto& c : gp.inequalities()) cp.inequalities.push_back(log_function(c.lhs));
  for (const auto& e : gp.equalities()) {
    std::vector<std::pair<int, double>> row(e.lhs.exponents().begin(), e.lhs.exponents().end());
    cp.equalities.emplace_back(std::move(row), e.lhs.log_coefficient());
  }
  for (const auto& b : gp.all_bounds()) {
    cp.lo.push_back(std::log(b.lo));
    cp.hi.push_back(std::log(b.hi));
  }
  return cp;
}

const char* to_string(GpStatus s) {
  switch (s) {
    case GpStatus::optimal: return "optimal";
    case GpStatus::max_iterations: return "max-iterations";
    case GpStatus::infeasible: return "infeasible-detected";
  }
  return "?";
}

double feasibility_residual(const GpProgram& gp, std::span<const double> x) {
  double worst = 0;
  for (const auto& c : gp.inequalities()) worst = std::max(worst, eval(c.lhs, x) - 1.0);
  for (const auto& e : gp.equalities()) worst = std::max(worst, std::abs(eval(e.lhs, x) - 1.0));
  for (int v = 0; v < gp.num_variables(); ++v) {
    const auto& b = gp.bounds(v);
    worst = std::max({worst, x[v] / b.hi - 1.0, b.lo / x[v] - 1.0});
  }
  return worst;
}

}  // namespace cran::gp
