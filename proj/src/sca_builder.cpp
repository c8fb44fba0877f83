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

#include <cmath>
#include <numbers>

#include "cran/sca.hpp"

namespace cran::sca {

using gp::Monomial;
using gp::Posynomial;

namespace {

constexpr double kLn2 = std::numbers::ln2;

void require_shape(const Matrix& m, Eigen::Index rows, Eigen::Index cols, const char* what) {
  if (m.rows() != rows || m.cols() != cols) throw InvariantError(std::string("shape mismatch: ") + what);
}

enum class Tag { rate, inv_ln2, neg_log, load_cap, load_log, load_cubic };

struct TaggedTerm {
  Tag tag;
  int r = 0, n = 0;
};

struct Group {
  Posynomial pos;  // monomialized side
  Posynomial neg;  // kept as a posynomial
  std::vector<TaggedTerm> tags;  // one per pos term

  void add_pos(const Monomial& m, Tag t, int r, int n) {
    pos += m;
    tags.push_back({t, r, n});
  }
};

double row_sum(const Matrix& m, int r) {
  double total = 0;
  for (Eigen::Index n = 0; n < m.cols(); ++n) total += m(r, n);
  return total;
}

std::vector<double> flatten(const Scenario& s, const Step1Iterate& prev) {
  const int R = s.num_rrhs(), N = s.num_users(), B = s.num_bbus();
  std::vector<double> x(R * N + R * B + R);
  for (int r = 0; r < R; ++r) {
    for (int n = 0; n < N; ++n) x[alpha_id(s, r, n)] = prev.alpha(r, n);
    for (int b = 0; b < B; ++b) x[beta_id(s, r, b)] = prev.beta(r, b);
    x[y_id(s, r)] = prev.y[r];
  }
  return x;
}

Monomial alpha(const Scenario& s, int r, int n, double c = 1.0) { return Monomial::variable(alpha_id(s, r, n), 1.0, c); }
Monomial beta(const Scenario& s, int r, int b) { return Monomial::variable(beta_id(s, r, b)); }

// C2.1~ for user n: sum_r alpha (log2(F gamma) - L_r(alpha)) >= R_n.
Group rate_group(const Scenario& s, const Step1Inputs& in, const Step1Iterate& prev, int n) {
  Group g;
  const int N = s.num_users();
  for (int r = 0; r < s.num_rrhs(); ++r) {
    const AffineLog L = dc_linearize_log_users(prev, r);
    const double a = std::log2(s.antennas[r] * in.gamma(r, n));
    if (a > 0)
      g.add_pos(alpha(s, r, n, a), Tag::rate, r, n);
    else if (a < 0)
      g.neg += alpha(s, r, n, -a);
    g.add_pos(alpha(s, r, n, 1.0 / kLn2), Tag::inv_ln2, r, n);
    if (L.at_prev < 0)
      g.add_pos(alpha(s, r, n, -L.at_prev), Tag::neg_log, r, n);
    else if (L.at_prev > 0)
      g.neg += alpha(s, r, n, L.at_prev);
    for (int m = 0; m < N; ++m) g.neg += alpha(s, r, n, L.slope) * alpha(s, r, m);
  }
  if (s.rate_req[n] > 0) g.neg += Monomial(s.rate_req[n]);
  return g;
}

// C5.1~ for BBU b: the load sum sits on the monomialized side's complement.
Group load_group(const Scenario& s, const Step1Inputs& in, const Step1Iterate& prev, int b) {
  Group g;  // pos: L_b + negative-load terms (monomialized); neg: the positive load terms
  const int N = s.num_users();
  g.add_pos(Monomial(s.bbu_capacity[b]), Tag::load_cap, -1, -1);
  for (int r = 0; r < s.num_rrhs(); ++r) {
    const AffineLog L = dc_linearize_log_users(prev, r);
    for (int n = 0; n < N; ++n) {
      const Monomial ab = alpha(s, r, n) * beta(s, r, b);
      const double a = std::log2(s.antennas[r] * in.gamma(r, n));
      if (a > 0)
        g.neg += Monomial(ab).scale(a);
      else if (a < 0)
        g.add_pos(Monomial(ab).scale(-a), Tag::load_log, r, n);
      g.neg += Monomial(ab).scale(1.0 / kLn2);
      if (L.at_prev < 0)
        g.neg += Monomial(ab).scale(-L.at_prev);
      else if (L.at_prev > 0)
        g.add_pos(Monomial(ab).scale(L.at_prev), Tag::load_log, r, n);
      for (int m = 0; m < N; ++m) g.add_pos(ab * alpha(s, r, m, L.slope), Tag::load_cubic, r, n);
    }
  }
  return g;
}

}  // namespace

Step1Iterate Step1Iterate::uniform(const Scenario& s) {
  Step1Iterate it;
  it.alpha = Matrix::Constant(s.num_rrhs(), s.num_users(), 1.0 / s.num_rrhs());
  it.beta = Matrix::Constant(s.num_rrhs(), s.num_bbus(), 1.0 / s.num_bbus());
  it.y = Vector::Ones(s.num_rrhs());
  return it;
}

Step1Iterate Step1Iterate::from_allocation(const Allocation& a) {
  Step1Iterate it;
  it.alpha = a.alpha.cwiseMax(kRelaxedFloor).cwiseMin(1.0);
  it.beta = a.beta.cwiseMax(kRelaxedFloor).cwiseMin(1.0);
  it.y = a.y.cwiseMax(kRelaxedFloor).cwiseMin(1.0);
  return it;
}

void Step1Iterate::validate(const Scenario& s) const {
  require_shape(alpha, s.num_rrhs(), s.num_users(), "alpha");
  require_shape(beta, s.num_rrhs(), s.num_bbus(), "beta");
  if (y.size() != s.num_rrhs()) throw InvariantError("shape mismatch: y");
  auto in_range = [](double v) { return v >= kRelaxedFloor * (1 - 1e-9) && v <= 1 + 1e-9; };
  for (Eigen::Index i = 0; i < alpha.size(); ++i)
    if (!in_range(alpha.data()[i])) throw InvariantError("Step 1 iterate alpha outside [floor, 1]");
  for (Eigen::Index i = 0; i < beta.size(); ++i)
    if (!in_range(beta.data()[i])) throw InvariantError("Step 1 iterate beta outside [floor, 1]");
  for (Eigen::Index i = 0; i < y.size(); ++i)
    if (!in_range(y[i])) throw InvariantError("Step 1 iterate y outside [floor, 1]");
}

Step1Inputs Step1Inputs::from_power(const Scenario& s, const Matrix& served_power) {
  const int R = s.num_rrhs(), N = s.num_users();
  require_shape(served_power, R, N, "power");
  const Matrix I = interference_matrix(served_power, s);
  Step1Inputs in;
  in.power.resize(R, N);
  in.gamma.resize(R, N);
  for (int r = 0; r < R; ++r) {
    int load = 0;
    for (int n = 0; n < N; ++n) load += served_power(r, n) > 0;
    for (int n = 0; n < N; ++n) {
      const double denom = s.noise() + I(r, n);
      double p = served_power(r, n);
      if (!(p > 0)) {
        const double target = std::max(load, 1) * std::exp2(s.rate_req[n]) / s.antennas[r];
        p = std::min(target * denom / s.gain(r, n), s.config.p_max);
      }
      in.power(r, n) = p;
      in.gamma(r, n) = p * s.gain(r, n) / denom;
    }
  }
  return in;
}

AffineLog dc_linearize_log_users(const Step1Iterate& prev, int r) {
  const double N0 = row_sum(prev.alpha, r);
  if (!(N0 > 0)) throw InvariantError("DC expansion point has an empty row " + std::to_string(r));
  return {std::log2(N0), 1.0 / (N0 * kLn2), N0};
}

AgmaWeights compute_weights_step1(const Step1Iterate& prev, const Scenario& s, const Step1Inputs& in) {
  prev.validate(s);
  const int R = s.num_rrhs(), N = s.num_users(), B = s.num_bbus();
  const auto x0 = flatten(s, prev);
  AgmaWeights w;
  w.lambda = w.phi = w.kappa = Matrix::Zero(R, N);
  for (int n = 0; n < N; ++n) {
    const Group g = rate_group(s, in, prev, n);
    const auto agma = gp::agma_monomialize(g.pos, x0);
    for (std::size_t i = 0; i < g.tags.size(); ++i) {
      const auto& t = g.tags[i];
      Matrix& dst = t.tag == Tag::rate ? w.lambda : t.tag == Tag::inv_ln2 ? w.phi : w.kappa;
      dst(t.r, t.n) += agma.weights[i];
    }
  }
  w.I_val = w.psi = Vector::Zero(B);
  w.xi.assign(B, Matrix::Zero(R, N));
  w.rho.assign(B, Matrix::Zero(R, N));
  for (int b = 0; b < B; ++b) {
    const Group g = load_group(s, in, prev, b);
    w.I_val[b] = gp::eval(g.pos, x0);
    if (!(w.I_val[b] > 0)) throw InvariantError("degenerate AGMA weights for BBU " + std::to_string(b));
    const auto agma = gp::agma_monomialize(g.pos, x0);
    for (std::size_t i = 0; i < g.tags.size(); ++i) {
      const auto& t = g.tags[i];
      if (t.tag == Tag::load_cap)
        w.psi[b] += agma.weights[i];
      else if (t.tag == Tag::load_log)
        w.xi[b](t.r, t.n) += agma.weights[i];
      else
        w.rho[b](t.r, t.n) += agma.weights[i];
    }
  }
  w.mu.resize(R);
  w.varphi.resize(R);
  for (int r = 0; r < R; ++r) {
    w.mu[r] = 1.0 / (1.0 + prev.y[r]);
    w.varphi[r] = prev.y[r] / (1.0 + prev.y[r]);
  }
  return w;
}

gp::GpProgram build_step1_gp(const Scenario& s, const Step1Inputs& in, const Step1Iterate& prev) {
  prev.validate(s);
  const int R = s.num_rrhs(), N = s.num_users(), B = s.num_bbus();
  require_shape(in.power, R, N, "Step 1 power");
  require_shape(in.gamma, R, N, "Step 1 gamma");
  for (Eigen::Index i = 0; i < in.power.size(); ++i)
    if (!(in.power.data()[i] > 0) || !(in.gamma.data()[i] > 0))
      throw InvariantError("Step 1 needs strictly positive powers and SINRs");

  gp::GpProgram prog;
  for (int r = 0; r < R; ++r)
    for (int n = 0; n < N; ++n)
      prog.add_variable("alpha_" + std::to_string(r) + "_" + std::to_string(n), kRelaxedFloor, 1.0);
  for (int r = 0; r < R; ++r)
    for (int b = 0; b < B; ++b)
      prog.add_variable("beta_" + std::to_string(r) + "_" + std::to_string(b), kRelaxedFloor, 1.0);
  for (int r = 0; r < R; ++r) prog.add_variable("y_" + std::to_string(r), kRelaxedFloor, 1.0);

  Posynomial obj;
  for (int r = 0; r < R; ++r)
    for (int n = 0; n < N; ++n) obj += alpha(s, r, n, in.power(r, n));
  for (int r = 0; r < R; ++r)
    obj += Monomial::variable(y_id(s, r), 1.0, s.config.cost_per_antenna * s.antennas[r]);
  prog.set_objective(obj);

  const auto x0 = flatten(s, prev);
  for (int n = 0; n < N; ++n) {
    const Group g = rate_group(s, in, prev, n);
    if (g.neg.empty()) continue;
    const auto agma = gp::agma_monomialize(g.pos, x0);
    prog.add_constraint(g.neg * agma.monomial.inverse(), "C2.1~[" + std::to_string(n) + "]");
  }
  for (int b = 0; b < B; ++b) {
    const Group g = load_group(s, in, prev, b);
    const auto agma = gp::agma_monomialize(g.pos, x0);
    prog.add_constraint(g.neg * agma.monomial.inverse(), "C5.1~[" + std::to_string(b) + "]");
  }
  for (int r = 0; r < R; ++r) {
    Posynomial lhs = Monomial(1.0);
    for (int b = 0; b < B; ++b) lhs += beta(s, r, b);
    const Posynomial y_plus_one = Posynomial(Monomial::variable(y_id(s, r))) + Monomial(1.0);
    const auto agma = gp::agma_monomialize(y_plus_one, x0);
    prog.add_constraint(lhs * agma.monomial.inverse(), "C6~[" + std::to_string(r) + "]");
  }
  for (int n = 0; n < N; ++n) {
    Posynomial c3;
    for (int r = 0; r < R; ++r) c3 += alpha(s, r, n);
    prog.add_constraint(c3, "C3[" + std::to_string(n) + "]");
  }
  for (int r = 0; r < R; ++r) {
    Posynomial c4;
    for (int b = 0; b < B; ++b) c4 += beta(s, r, b);
    prog.add_constraint(c4, "C4[" + std::to_string(r) + "]");
  }
  const double omega = s.config.effective_omega();
  for (int r = 0; r < R; ++r) {
    Posynomial c7;
    for (int n = 0; n < N; ++n) c7 += alpha(s, r, n);
    prog.add_constraint(c7 * Monomial::variable(y_id(s, r), -1.0, 1.0 / omega), "C7[" + std::to_string(r) + "]");
  }
  return prog;
}

std::vector<double> step1_values(const Scenario& s, const Step1Iterate& it) { return flatten(s, it); }

Step1Iterate step1_from_values(const Scenario& s, const std::vector<double>& values) {
  const int R = s.num_rrhs(), N = s.num_users(), B = s.num_bbus();
  if (values.size() != static_cast<std::size_t>(R * N + R * B + R))
    throw InvariantError("Step 1 solution has the wrong length");
  Step1Iterate it;
  it.alpha.resize(R, N);
  it.beta.resize(R, B);
  it.y.resize(R);
  for (int r = 0; r < R; ++r) {
    for (int n = 0; n < N; ++n) it.alpha(r, n) = values[alpha_id(s, r, n)];
    for (int b = 0; b < B; ++b) it.beta(r, b) = values[beta_id(s, r, b)];
    it.y[r] = values[y_id(s, r)];
  }
  return it;
}

Matrix Step2Gp::power_from(const std::vector<double>& values, int R, int N) const {
  Matrix p = Matrix::Zero(R, N);
  for (std::size_t i = 0; i < served.size(); ++i) p(served[i].first, served[i].second) = values.at(i);
  return p;
}

std::vector<double> Step2Gp::start_from(const Matrix& power) const {
  std::vector<double> x(served.size());
  for (std::size_t i = 0; i < served.size(); ++i) {
    const auto& b = program.bounds(static_cast<int>(i));
    x[i] = std::clamp(power(served[i].first, served[i].second), b.lo, b.hi);
  }
  return x;
}

Step2Gp build_step2_gp(const Scenario& s, const Allocation& fixed, const Step2Iterate& prev, bool load_bound) {
  const int R = s.num_rrhs(), N = s.num_users(), B = s.num_bbus();
  fixed.check_shape(s);
  require_shape(prev.power, R, N, "Step 2 power");
  auto binary = [](double v) { return v == 0.0 || v == 1.0; };
  for (Eigen::Index i = 0; i < fixed.alpha.size(); ++i)
    if (!binary(fixed.alpha.data()[i])) throw InvariantError("invalid association: alpha not binary");
  for (Eigen::Index i = 0; i < fixed.beta.size(); ++i)
    if (!binary(fixed.beta.data()[i])) throw InvariantError("invalid association: beta not binary");
  for (int n = 0; n < N; ++n)
    if (fixed.alpha.col(n).sum() > 1) throw InvariantError("invalid association: user " + std::to_string(n) + " has two servers");
  const double omega = s.config.effective_omega();
  for (int r = 0; r < R; ++r) {
    if (!binary(fixed.y[r])) throw InvariantError("invalid association: y not binary");
    if (fixed.beta.row(r).sum() > fixed.y[r]) throw InvariantError("invalid association: C4/C6 on RRH " + std::to_string(r));
    if (row_sum(fixed.alpha, r) > omega * fixed.y[r]) throw InvariantError("invalid association: C7 on RRH " + std::to_string(r));
  }

  Step2Gp out;
  auto& prog = out.program;
  std::vector<int> load(R, 0);
  Matrix var_of = Matrix::Constant(R, N, -1);
  for (int r = 0; r < R; ++r)
    for (int n = 0; n < N; ++n)
      if (fixed.alpha(r, n) == 1.0) {
        var_of(r, n) = prog.add_variable("p_" + std::to_string(r) + "_" + std::to_string(n), kPowerFloor, s.config.p_max);
        out.served.emplace_back(r, n);
        ++load[r];
      }
  auto p = [&](int r, int n, double c = 1.0) { return Monomial::variable(static_cast<int>(var_of(r, n)), 1.0, c); };

  Posynomial obj;
  for (const auto& [r, n] : out.served) obj += p(r, n);
  double antenna = 0;
  for (int r = 0; r < R; ++r) antenna += s.config.cost_per_antenna * fixed.y[r] * s.antennas[r];
  if (antenna > 0) obj += Monomial(antenna);
  if (obj.empty()) obj += Monomial(1.0);
  prog.set_objective(obj);

  for (int r = 0; r < R; ++r) {
    if (load[r] == 0) continue;
    Posynomial c1;
    for (int n = 0; n < N; ++n)
      if (var_of(r, n) >= 0) c1 += p(r, n, 1.0 / s.config.p_max);
    prog.add_constraint(c1, "C1[" + std::to_string(r) + "]");
  }

  for (const auto& [r, n] : out.served) {
    // (sigma^2 + I) N 2^R / (F h p) <= 1
    Posynomial num = Monomial(s.noise());
    for (const auto& [rp, np] : out.served)
      if (rp != r && np != n) num += p(rp, np, s.gain(rp, n));
    const double scale = load[r] * std::exp2(s.rate_req[n]) / (s.antennas[r] * s.gain(r, n));
    prog.add_constraint(num * Monomial::variable(static_cast<int>(var_of(r, n)), -1.0, scale),
                        "C2.2~[" + std::to_string(n) + "]");
  }

  const double denom = s.noise() + s.config.interference_threshold;
  for (int b = 0; b < B && load_bound; ++b) {
    Monomial m = Monomial::from_log(-s.bbu_capacity[b] * kLn2);
    bool any = false;
    for (const auto& [r, n] : out.served)
      if (fixed.beta(r, b) == 1.0) {
        m *= p(r, n, s.antennas[r] * s.gain(r, n) / (load[r] * denom));
        any = true;
      }
    if (any) prog.add_constraint(m, "C5.2~[" + std::to_string(b) + "]");
  }
  return out;
}

}  // namespace cran::sca
