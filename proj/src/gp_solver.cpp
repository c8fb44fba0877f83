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

#include <Eigen/Sparse>
#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "cran/gp_core.hpp"
#include "cran/kernels.hpp"

namespace cran::gp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kDenseLimit = 600;
constexpr std::size_t kWideSupport = 64;

// Original log-variable i expressed in the reduced free variables u:
// v_i = constant + sum coef * u_j.
struct AffineExpr {
  double constant = 0.0;
  std::vector<std::pair<int, double>> terms;
};

// Barrier-ready problem: f0(u) -> min, f_j(u) <= 0, lo < u < hi.
struct Reduced {
  int n = 0;
  LogFunction objective;
  std::vector<LogFunction> ineq;
  std::vector<double> lo, hi;
  std::vector<AffineExpr> map;  // one per original variable
  std::vector<int> free_orig;   // original index of each free variable
  bool infeasible = false;
};

LogFunction remap(const LogFunction& f, const std::vector<AffineExpr>& map) {
  LogFunction out;
  out.row_start.push_back(0);
  std::map<int, double> acc;
  for (int i = 0; i < f.num_terms(); ++i) {
    acc.clear();
    double b = f.log_coeff[i];
    for (int p = f.row_start[i]; p < f.row_start[i + 1]; ++p) {
      const auto& e = map[f.col[p]];
      b += f.val[p] * e.constant;
      for (const auto& [j, c] : e.terms) acc[j] += f.val[p] * c;
    }
    for (const auto& [j, c] : acc)
      if (c != 0.0) {
        out.col.push_back(j);
        out.val.push_back(c);
      }
    out.log_coeff.push_back(b);
    out.row_start.push_back(static_cast<int>(out.col.size()));
  }
  acc.clear();
  double shift_const = 0.0;
  for (const auto& [v, c] : f.shift) {
    const auto& e = map[v];
    shift_const += c * e.constant;
    for (const auto& [j, a] : e.terms) acc[j] += c * a;
  }
  for (auto& b : out.log_coeff) b += shift_const;
  for (const auto& [j, c] : acc)
    if (c != 0.0) out.shift.emplace_back(j, c);
  out.finalize();
  return out;
}

LogFunction affine_function(const AffineExpr& e, double sign, double offset) {
  // sign * (constant + terms . u) + offset, as a single-term log function.
  LogFunction f;
  f.row_start = {0, 0};
  f.log_coeff = {sign * e.constant + offset};
  for (const auto& [j, c] : e.terms) f.shift.emplace_back(j, sign * c);
  f.finalize();
  return f;
}

Reduced reduce(const ConvexProgram& cp, const LogFunction& objective) {
  Reduced red;
  const int nv = cp.num_vars;
  red.map.resize(nv);

  enum class Kind { free, fixed, eliminated };
  std::vector<Kind> kind(nv, Kind::free);
  for (int i = 0; i < nv; ++i) {
    if (cp.lo[i] > cp.hi[i] + 1e-12) {
      red.infeasible = true;
      return red;
    }
    if (cp.hi[i] - cp.lo[i] <= 1e-12) kind[i] = Kind::fixed;
  }

  // Eliminate equalities by pivoting, expressing pivots through the rest.
  std::vector<std::map<int, double>> expr(nv);  // for eliminated vars: coefficients on others
  std::vector<double> expr_const(nv, 0.0);
  std::vector<int> pivots;
  for (const auto& [row, b] : cp.equalities) {
    std::map<int, double> coef;
    double cst = b;
    for (const auto& [v, a] : row) {
      if (kind[v] == Kind::fixed) {
        cst += a * cp.lo[v];
      } else if (kind[v] == Kind::eliminated) {
        cst += a * expr_const[v];
        for (const auto& [w, c] : expr[v]) coef[w] += a * c;
      } else {
        coef[v] += a;
      }
    }
    int piv = -1;
    double best = 1e-12;
    for (const auto& [v, a] : coef)
      if (std::abs(a) > best) best = std::abs(a), piv = v;
    if (piv < 0) {
      if (std::abs(cst) > 1e-9) {
        red.infeasible = true;
        return red;
      }
      continue;
    }
    const double ap = coef[piv];
    std::map<int, double> e;
    for (const auto& [v, a] : coef)
      if (v != piv) e[v] = -a / ap;
    const double ec = -cst / ap;
    for (int q : pivots) {
      auto it = expr[q].find(piv);
      if (it == expr[q].end()) continue;
      const double k = it->second;
      expr[q].erase(it);
      expr_const[q] += k * ec;
      for (const auto& [v, a] : e) expr[q][v] += k * a;
    }
    expr[piv] = std::move(e);
    expr_const[piv] = ec;
    kind[piv] = Kind::eliminated;
    pivots.push_back(piv);
  }

  std::vector<int> free_index(nv, -1);
  for (int i = 0; i < nv; ++i)
    if (kind[i] == Kind::free) {
      free_index[i] = red.n++;
      red.free_orig.push_back(i);
      red.lo.push_back(cp.lo[i]);
      red.hi.push_back(cp.hi[i]);
    }
  for (int i = 0; i < nv; ++i) {
    auto& m = red.map[i];
    if (kind[i] == Kind::free) {
      m.terms = {{free_index[i], 1.0}};
    } else if (kind[i] == Kind::fixed) {
      m.constant = cp.lo[i];
    } else {
      m.constant = expr_const[i];
      for (const auto& [v, a] : expr[i])
        if (a != 0.0) m.terms.emplace_back(free_index[v], a);
      std::sort(m.terms.begin(), m.terms.end());
    }
  }

  const bool identity = pivots.empty() && red.n == nv;
  red.objective = identity ? objective : remap(objective, red.map);
  red.ineq.reserve(cp.inequalities.size() + 2 * pivots.size());
  for (const auto& f : cp.inequalities) red.ineq.push_back(identity ? f : remap(f, red.map));
  for (int q : pivots) {
    red.ineq.push_back(affine_function(red.map[q], 1.0, -cp.hi[q]));
    red.ineq.push_back(affine_function(red.map[q], -1.0, cp.lo[q]));
  }
  return red;
}

struct BarrierOutcome {
  std::vector<double> u;
  bool converged = false;
  bool stopped_early = false;
  double gap = kInf;
  double stationarity = kInf;
};

class Barrier {
 public:
  Barrier(const Reduced& p, const GpOptions& opt, int& steps) : p_(p), opt_(opt), steps_(steps) {}

  // Requires a strictly feasible u. stop(u) ends the run early.
  template <typename Stop>
  BarrierOutcome run(std::vector<double> u, double t, Stop stop) {
    BarrierOutcome out;
    const int n = p_.n;
    const double m_total = static_cast<double>(p_.ineq.size()) + 2.0 * n;
    const double mu = 20.0;
    std::vector<double> g(n), dx(n), trial(n);
    while (true) {
      // Newton centering.
      while (true) {
        if (steps_ >= opt_.max_iter) {
          out.u = u;
          out.gap = m_total / t;
          return out;
        }
        ++steps_;
        assemble(u, t, g);
        if (!newton_direction(g, dx)) break;
        double dec = 0;
        for (int i = 0; i < n; ++i) dec -= g[i] * dx[i];
        if (dec / 2 <= 1e-9) break;
        const double phi0 = phi(u, t);
        double s = 1.0;
        bool moved = false;
        while (s > 1e-14) {
          for (int i = 0; i < n; ++i) trial[i] = u[i] + s * dx[i];
          const double ph = phi(trial, t);
          if (std::isfinite(ph) && ph < phi0 && ph <= phi0 - 0.01 * s * dec) {
            moved = true;
            break;
          }
          s *= 0.5;
        }
        if (!moved) break;
        u.swap(trial);
        if (stop(u)) {
          out.u = u;
          out.stopped_early = true;
          return out;
        }
      }
      out.gap = m_total / t;
      if (out.gap <= opt_.tol_opt * 0.5 || n == 0) {
        out.stationarity = kkt_residual(u, t);
        out.converged = true;
        out.u = u;
        return out;
      }
      t *= mu;
    }
  }

  // Lagrangian gradient and complementarity with multipliers of the nearly
  // active constraints refit by least squares.
  double kkt_residual(const std::vector<double>& u, double t) {
    const int n = p_.n;
    kernels::evaluate(p_.objective, u, obj_d_, false);
    kernels::evaluate_batch_serial(p_.ineq, u, ineq_d_, false);
    Eigen::VectorXd g0 = Eigen::VectorXd::Zero(n);
    for (std::size_t a = 0; a < p_.objective.support.size(); ++a) g0[p_.objective.support[a]] += obj_d_.grad[a];

    std::vector<Eigen::Triplet<double>> trip;
    std::vector<double> slack;
    double compl_inactive = 0.0;
    auto consider = [&](double d, auto&& emit) {
      const double lam = 1.0 / (t * d);
      if (lam >= d) {
        emit(static_cast<int>(slack.size()));
        slack.push_back(d);
      } else {
        compl_inactive += lam * d;
      }
    };
    for (std::size_t j = 0; j < p_.ineq.size(); ++j) {
      const auto& f = p_.ineq[j];
      consider(-ineq_d_[j].value, [&](int k) {
        for (std::size_t a = 0; a < f.support.size(); ++a) trip.emplace_back(f.support[a], k, ineq_d_[j].grad[a]);
      });
    }
    for (int i = 0; i < n; ++i) {
      consider(u[i] - p_.lo[i], [&](int k) { trip.emplace_back(i, k, -1.0); });
      consider(p_.hi[i] - u[i], [&](int k) { trip.emplace_back(i, k, 1.0); });
    }
    const int k = static_cast<int>(slack.size());
    Eigen::VectorXd lam = Eigen::VectorXd::Zero(k);
    Eigen::SparseMatrix<double> J(n, k);
    if (k > 0) {
      J.setFromTriplets(trip.begin(), trip.end());
      Eigen::SparseMatrix<double> N = J.transpose() * J;
      for (int i = 0; i < k; ++i) N.coeffRef(i, i) += 1e-14 * (1.0 + N.coeff(i, i));
      Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(N);
      if (ldlt.info() == Eigen::Success) lam = ldlt.solve(-(J.transpose() * g0));
      for (int i = 0; i < k; ++i)
        if (!(lam[i] > 0)) lam[i] = 0.0;
    }
    const Eigen::VectorXd grad = g0 + J * lam;
    double compl_active = 0.0;
    for (int i = 0; i < k; ++i) compl_active += lam[i] * slack[i];
    return std::max(grad.lpNorm<Eigen::Infinity>(), compl_active + compl_inactive);
  }

  double phi(const std::vector<double>& u, double t) {
    double total = 0;
    for (int i = 0; i < p_.n; ++i) {
      const double a = u[i] - p_.lo[i], b = p_.hi[i] - u[i];
      if (!(a > 0) || !(b > 0)) return kInf;
      total -= std::log(a) + std::log(b);
    }
    if (opt_.parallel)
      kernels::values_omp(p_.ineq, u, vals_);
    else
      kernels::values_serial(p_.ineq, u, vals_);
    for (double f : vals_) {
      if (!(f < 0)) return kInf;
      total -= std::log(-f);
    }
    return total + t * p_.objective.value(u);
  }

 private:
  void assemble(const std::vector<double>& u, double t, std::vector<double>& g) {
    const int n = p_.n;
    std::fill(g.begin(), g.end(), 0.0);
    const bool dense = n <= kDenseLimit;
    if (dense) {
      H_.setZero(n, n);
    } else {
      trip_.clear();
      low_rank_.clear();
      low_rank_w_.clear();
    }
    auto add = [&](const LogFunction& f, const kernels::LocalDerivatives& d, double w_h, double w_r1) {
      const auto m = f.support.size();
      for (std::size_t a = 0; a < m; ++a) g[f.support[a]] += w_h * d.grad[a];
      for (std::size_t a = 0; a < m; ++a) {
        const int ia = f.support[a];
        for (std::size_t b = 0; b < m; ++b) {
          const double h = w_h * d.hess[a * m + b] + w_r1 * d.grad[a] * d.grad[b];
          if (h == 0.0) continue;
          if (dense)
            H_(ia, f.support[b]) += h;
          else
            trip_.emplace_back(ia, f.support[b], h);
        }
      }
    };
    if (dense) {
      kernels::evaluate(p_.objective, u, obj_d_);
      add(p_.objective, obj_d_, t, 0.0);
      if (opt_.parallel)
        kernels::evaluate_batch_omp(p_.ineq, u, ineq_d_);
      else
        kernels::evaluate_batch_serial(p_.ineq, u, ineq_d_);
      for (std::size_t j = 0; j < p_.ineq.size(); ++j) {
        const double d = -ineq_d_[j].value;
        add(p_.ineq[j], ineq_d_[j], 1.0 / d, 1.0 / (d * d));
      }
    } else {
      auto add_sparse = [&](const LogFunction& f, bool barrier, double w) {
        const bool wide = f.support.size() > kWideSupport;
        kernels::evaluate(f, u, obj_d_, !wide);
        double w_h = w, w_r1 = 0.0;
        if (barrier) {
          const double d = -obj_d_.value;
          w_h = 1.0 / d;
          w_r1 = 1.0 / (d * d);
        }
        if (wide)
          low_rank_split(f, u, obj_d_, w_h, w_r1, g);
        else
          add(f, obj_d_, w_h, w_r1);
      };
      add_sparse(p_.objective, false, t);
      for (const auto& f : p_.ineq) add_sparse(f, true, 0.0);
    }
    for (int i = 0; i < n; ++i) {
      const double a = u[i] - p_.lo[i], b = p_.hi[i] - u[i];
      g[i] += -1.0 / a + 1.0 / b;
      const double h = 1.0 / (a * a) + 1.0 / (b * b);
      if (dense)
        H_(i, i) += h;
      else
        trip_.emplace_back(i, i, h);
    }
  }

  // Curvature of a wide function: sum_i pi_i a_i a_i^T is sparse, the
  // remaining rank-one pieces are kept apart for a Woodbury solve.
  void low_rank_split(const LogFunction& f, const std::vector<double>& u, const kernels::LocalDerivatives& d,
                      double w_h, double w_r1, std::vector<double>& g) {
    const int n = p_.n;
    const auto m = f.support.size();
    for (std::size_t a = 0; a < m; ++a) g[f.support[a]] += w_h * d.grad[a];
    const int terms = f.num_terms();
    z_.resize(terms);
    double zmax = -kInf;
    for (int i = 0; i < terms; ++i) {
      double z = f.log_coeff[i];
      for (int p = f.row_start[i]; p < f.row_start[i + 1]; ++p) z += f.val[p] * u[f.col[p]];
      z_[i] = z;
      zmax = std::max(zmax, z);
    }
    double total = 0;
    for (auto& z : z_) total += (z = std::exp(z - zmax));
    for (int i = 0; i < terms; ++i) {
      const double pi = z_[i] / total;
      for (int p = f.row_start[i]; p < f.row_start[i + 1]; ++p)
        for (int q = f.row_start[i]; q < f.row_start[i + 1]; ++q)
          trip_.emplace_back(f.col[p], f.col[q], w_h * pi * f.val[p] * f.val[q]);
    }
    Eigen::VectorXd ga = Eigen::VectorXd::Zero(n), gf = Eigen::VectorXd::Zero(n);
    for (std::size_t a = 0; a < m; ++a) ga[f.support[a]] = gf[f.support[a]] = d.grad[a];
    for (std::size_t k = 0; k < f.shift.size(); ++k) ga[f.support[f.shift_local[k]]] -= f.shift[k].second;
    if (ga.squaredNorm() > 0) {
      low_rank_.push_back(std::move(ga));
      low_rank_w_.push_back(-w_h);
    }
    if (w_r1 != 0.0) {
      low_rank_.push_back(std::move(gf));
      low_rank_w_.push_back(w_r1);
    }
  }

  bool newton_direction(const std::vector<double>& g, std::vector<double>& dx) {
    const int n = p_.n;
    if (n == 0) return false;
    Eigen::Map<const Eigen::VectorXd> gv(g.data(), n);
    Eigen::Map<Eigen::VectorXd> dv(dx.data(), n);
    if (n <= kDenseLimit) {
      double shift = 0.0;
      for (int attempt = 0; attempt < 8; ++attempt) {
        Eigen::LLT<Eigen::MatrixXd> llt(H_ + shift * Eigen::MatrixXd::Identity(n, n));
        if (llt.info() == Eigen::Success) {
          dv = llt.solve(-gv);
          if (dv.allFinite()) return true;
        }
        shift = shift == 0.0 ? 1e-10 * std::max(1.0, H_.diagonal().cwiseAbs().maxCoeff()) : shift * 100;
      }
      return false;
    }
    Eigen::SparseMatrix<double> S(n, n);
    S.setFromTriplets(trip_.begin(), trip_.end());
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(S);
    if (ldlt.info() != Eigen::Success) return false;
    dv = ldlt.solve(-gv);
    const int k = static_cast<int>(low_rank_.size());
    if (k > 0) {
      Eigen::MatrixXd U(n, k);
      for (int c = 0; c < k; ++c) U.col(c) = low_rank_[c];
      const Eigen::MatrixXd Z = ldlt.solve(U);
      Eigen::MatrixXd cap = U.transpose() * Z;
      for (int c = 0; c < k; ++c) cap(c, c) += 1.0 / low_rank_w_[c];
      dv -= Z * cap.partialPivLu().solve(U.transpose() * dv);
    }
    return dv.allFinite();
  }

  const Reduced& p_;
  const GpOptions& opt_;
  int& steps_;
  Eigen::MatrixXd H_;
  std::vector<Eigen::Triplet<double>> trip_;
  std::vector<Eigen::VectorXd> low_rank_;
  std::vector<double> low_rank_w_;
  std::vector<double> z_;
  kernels::LocalDerivatives obj_d_;
  std::vector<kernels::LocalDerivatives> ineq_d_;
  std::vector<double> vals_;
};

double max_constraint(const Reduced& p, const std::vector<double>& u) {
  double worst = -kInf;
  for (const auto& f : p.ineq) worst = std::max(worst, f.value(u));
  return worst;
}

// Phase I: min s s.t. f_j(u) - s <= 0 over the same box.
Reduced phase_one_problem(const Reduced& p, double s_lo, double s_hi) {
  Reduced q;
  q.n = p.n + 1;
  q.lo = p.lo;
  q.hi = p.hi;
  q.lo.push_back(s_lo);
  q.hi.push_back(s_hi);
  q.objective.row_start = {0, 0};
  q.objective.log_coeff = {0.0};
  q.objective.shift = {{p.n, 1.0}};
  q.objective.finalize();
  for (const auto& f : p.ineq) {
    LogFunction g = f;
    g.shift.emplace_back(p.n, -1.0);
    g.finalize();
    q.ineq.push_back(std::move(g));
  }
  return q;
}

Reduced shifted(const Reduced& p, double slack) {
  Reduced q = p;
  for (auto& f : q.ineq)
    for (auto& b : f.log_coeff) b -= slack;
  return q;
}

}  // namespace

GpSolution solve(const GpProgram& gp, const GpOptions& opt, std::optional<std::span<const double>> start) {
  if (!(opt.tol_feas > 0) || !(opt.tol_opt > 0) || opt.max_iter < 1)
    throw std::invalid_argument("GP solve: tolerances must be positive and max_iter >= 1");
  const ConvexProgram cp = log_transform(gp);

  // Additive constants in the objective do not move the minimizer.
  Posynomial varying;
  for (const auto& t : gp.objective().terms())
    if (!t.is_constant()) varying += t;
  const LogFunction objective = varying.empty() ? log_function(Posynomial(Monomial(1.0))) : log_function(varying);

  GpSolution sol;
  const Reduced red = reduce(cp, objective);
  if (red.infeasible) {
    sol.status = GpStatus::infeasible;
    sol.feasibility_residual = kInf;
    return sol;
  }
  const int n = red.n;

  // Start point: warm start pulled strictly inside the box, else the box center.
  std::vector<double> u(n);
  std::vector<double> v_start;
  if (start && start->size() == static_cast<std::size_t>(gp.num_variables())) {
    for (double x : *start) v_start.push_back(x > 0 ? std::log(x) : -kInf);
  }
  for (int j = 0; j < n; ++j) {
    const double lo = red.lo[j], hi = red.hi[j], w = hi - lo;
    const double margin = std::min(1e-6 * std::max(1.0, w), 0.25 * w);
    const double guess = v_start.empty() ? 0.5 * (lo + hi) : v_start[red.free_orig[j]];
    u[j] = std::isfinite(guess) ? std::clamp(guess, lo + margin, hi - margin) : 0.5 * (lo + hi);
  }

  int steps = 0;
  const double feas_log = std::log1p(opt.tol_feas);
  Reduced work = red;
  if (!red.ineq.empty() && !(max_constraint(red, u) < 0)) {
    const double s0 = max_constraint(red, u) + 1.0;
    Reduced ph1 = phase_one_problem(red, std::min(-1e3, s0 - 1e3), s0 + 10.0);
    std::vector<double> u1 = u;
    u1.push_back(s0);
    Barrier b1(ph1, opt, steps);
    auto early = [n](const std::vector<double>& x) { return x[n] < -1e-3; };
    const BarrierOutcome r1 = b1.run(u1, 1.0, early);
    std::vector<double> uu(r1.u.begin(), r1.u.begin() + n);
    const double s_now = max_constraint(red, uu);
    if (s_now < 0) {
      u = uu;
    } else if (r1.converged && s_now - r1.gap > feas_log) {
      sol.status = GpStatus::infeasible;
      sol.feasibility_residual = std::expm1(s_now);
      sol.newton_steps = steps;
      sol.values.resize(gp.num_variables());
      for (int i = 0; i < cp.num_vars; ++i) {
        double v = red.map[i].constant;
        for (const auto& [j, c] : red.map[i].terms) v += c * uu[j];
        sol.values[i] = std::exp(v);
      }
      return sol;
    } else if (s_now <= feas_log * 0.9) {
      // Marginal: relax by a fraction of the feasibility tolerance.
      work = shifted(red, 0.5 * (s_now + feas_log * 0.9) + 1e-300);
      u = uu;
      if (!(max_constraint(work, u) < 0)) {
        sol.status = GpStatus::max_iterations;
        sol.newton_steps = steps;
        return sol;
      }
    } else {
      sol.status = r1.converged ? GpStatus::infeasible : GpStatus::max_iterations;
      sol.feasibility_residual = std::expm1(s_now);
      sol.newton_steps = steps;
      return sol;
    }
  }

  Barrier b2(work, opt, steps);
  const BarrierOutcome r2 = b2.run(u, 1.0, [](const std::vector<double>&) { return false; });

  sol.values.resize(gp.num_variables());
  for (int i = 0; i < cp.num_vars; ++i) {
    double v = red.map[i].constant;
    for (const auto& [j, c] : red.map[i].terms) v += c * r2.u[j];
    sol.values[i] = std::exp(v);
  }
  sol.newton_steps = steps;
  sol.objective_value = eval(gp.objective(), sol.values);
  sol.feasibility_residual = feasibility_residual(gp, sol.values);
  sol.stationarity_residual = r2.stationarity;
  sol.status = (r2.converged && sol.feasibility_residual <= opt.tol_feas && sol.stationarity_residual <= opt.tol_opt)
                   ? GpStatus::optimal
                   : GpStatus::max_iterations;
  return sol;
}

}  // namespace cran::gp
