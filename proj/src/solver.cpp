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

#include "cran/solver.hpp"

#include "cran/baseline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace cran {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double max_abs_diff(const Matrix& a, const Matrix& b) { return a.rows() ? (a - b).cwiseAbs().maxCoeff() : 0.0; }
double max_abs_diff(const Vector& a, const Vector& b) { return a.size() ? (a - b).cwiseAbs().maxCoeff() : 0.0; }

int load_of(const Allocation& a, int r) {
  int k = 0;
  for (Eigen::Index n = 0; n < a.alpha.cols(); ++n) k += a.alpha(r, n) == 1.0;
  return k;
}

void note(SolveTrace* trace, std::string msg) {
  if (trace) trace->log.push_back(std::move(msg));
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(9);
  os << v;
  return os.str();
}

}  // namespace

const char* to_string(RoundingPolicy p) { return p == RoundingPolicy::argmax ? "argmax" : "consolidate"; }

RoundingPolicy rounding_policy_from_string(const std::string& s) {
  if (s == "argmax") return RoundingPolicy::argmax;
  if (s == "consolidate") return RoundingPolicy::consolidate;
  throw std::invalid_argument("unknown rounding policy '" + s + "'");
}

void SolverConfig::validate() const {
  for (double e : {eps1, eps2, eps3, eps4})
    if (!(e > 0) || !(e < 1)) throw std::invalid_argument("convergence tolerances must lie in (0, 1)");
  if (max_inner_iter < 1 || max_outer_iter < 1) throw std::invalid_argument("iteration limits must be >= 1");
  if (!(margin >= 0)) throw std::invalid_argument("margin must be nonnegative");
  if (!(tol_feas > 0) || !(tol_opt > 0) || gp_max_iter < 1) throw std::invalid_argument("bad GP tolerances");
}

gp::GpOptions SolverConfig::gp_options() const {
  gp::GpOptions o;
  o.tol_feas = tol_feas;
  o.tol_opt = tol_opt;
  o.max_iter = gp_max_iter;
  o.parallel = parallel;
  return o;
}

std::string SolveTrace::to_csv() const {
  std::ostringstream os;
  os << "outer,step,inner,objective,d_alpha,d_beta,d_y,d_power,gp_status,accepted,converged\n";
  for (const auto& r : inner)
    os << r.outer << ',' << r.step << ',' << r.inner << ',' << fmt(r.objective) << ',' << fmt(r.d_alpha) << ','
       << fmt(r.d_beta) << ',' << fmt(r.d_y) << ',' << fmt(r.d_power) << ',' << r.gp_status << ',' << r.accepted
       << ',' << r.converged << '\n';
  return os.str();
}

void SolveTrace::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << to_csv();
}

Step1Result step1_solve(const Scenario& s, const sca::Step1Inputs& in, const sca::Step1Iterate& init,
                        const SolverConfig& cfg, SolveTrace* trace, int outer, bool beta_only) {
  init.validate(s);
  Step1Result res{init, 0, false};
  double prev_obj = kInf;
  for (int k = 1; k <= cfg.max_inner_iter; ++k) {
    auto prog = sca::build_step1_gp(s, in, res.iterate);
    if (beta_only) {
      for (int r = 0; r < s.num_rrhs(); ++r) {
        for (int n = 0; n < s.num_users(); ++n)
          prog.set_bounds(sca::alpha_id(s, r, n), init.alpha(r, n), init.alpha(r, n));
        prog.set_bounds(sca::y_id(s, r), init.y[r], init.y[r]);
      }
    }
    const auto x0 = sca::step1_values(s, res.iterate);
    const auto sol = gp::solve(prog, cfg.gp_options(), std::span<const double>(x0));
    InnerRecord rec;
    rec.outer = outer;
    rec.step = 1;
    rec.inner = k;
    rec.gp_status = gp::to_string(sol.status);
    const bool usable = sol.status == gp::GpStatus::optimal ||
                        (sol.status == gp::GpStatus::max_iterations && !sol.values.empty() &&
                         sol.feasibility_residual <= 1e-6);
    if (!usable) {
      rec.accepted = false;
      if (trace) trace->inner.push_back(rec);
      if (k == 1 && sol.status == gp::GpStatus::infeasible) throw InfeasibleError("Step 1 subproblem is infeasible");
      break;
    }
    auto next = sca::step1_from_values(s, sol.values);
    next.alpha = next.alpha.cwiseMax(sca::kRelaxedFloor).cwiseMin(1.0);
    next.beta = next.beta.cwiseMax(sca::kRelaxedFloor).cwiseMin(1.0);
    next.y = next.y.cwiseMax(sca::kRelaxedFloor).cwiseMin(1.0);
    rec.objective = sol.objective_value;
    rec.d_alpha = max_abs_diff(next.alpha, res.iterate.alpha);
    rec.d_beta = max_abs_diff(next.beta, res.iterate.beta);
    rec.d_y = max_abs_diff(next.y, res.iterate.y);
    if (sol.objective_value > prev_obj + 1e-6 * std::max(1.0, std::abs(prev_obj))) {
      rec.accepted = false;
      if (trace) trace->inner.push_back(rec);
      break;
    }
    rec.converged = rec.d_alpha <= cfg.eps1 && rec.d_beta <= cfg.eps2 && rec.d_y <= cfg.eps3;
    if (trace) trace->inner.push_back(rec);
    res.iterate = std::move(next);
    res.iterations = k;
    prev_obj = sol.objective_value;
    if (rec.converged) {
      res.converged = true;
      break;
    }
  }
  return res;
}

namespace {

Step2Result step2_pass(const Scenario& s, const Allocation& assoc, const sca::Step2Iterate& init,
                       const SolverConfig& cfg, SolveTrace* trace, int outer, bool load_bound) {
  const auto g = sca::build_step2_gp(s, assoc, init, load_bound);
  const int R = s.num_rrhs(), N = s.num_users();
  Step2Result res;
  res.load_bound_dropped = !load_bound;
  res.power = g.power_from(g.start_from(init.power), R, N);
  if (g.served.empty()) {
    res.power.setZero();
    res.converged = true;
    return res;
  }
  double prev_obj = kInf;
  for (int k = 1; k <= cfg.max_inner_iter; ++k) {
    const auto x0 = g.start_from(res.power);
    const auto sol = gp::solve(g.program, cfg.gp_options(), std::span<const double>(x0));
    InnerRecord rec;
    rec.outer = outer;
    rec.step = 2;
    rec.inner = k;
    rec.gp_status = gp::to_string(sol.status);
    const bool usable = sol.status == gp::GpStatus::optimal ||
                        (sol.status == gp::GpStatus::max_iterations && !sol.values.empty() &&
                         sol.feasibility_residual <= 1e-6);
    if (!usable) {
      rec.accepted = false;
      if (trace) trace->inner.push_back(rec);
      if (k == 1) res.feasible = false;
      break;
    }
    const Matrix next = g.power_from(sol.values, R, N);
    rec.objective = sol.objective_value;
    rec.d_power = max_abs_diff(next, res.power);
    if (sol.objective_value > prev_obj + 1e-6 * std::max(1.0, std::abs(prev_obj))) {
      rec.accepted = false;
      if (trace) trace->inner.push_back(rec);
      break;
    }
    rec.converged = rec.d_power <= cfg.eps4;
    if (trace) trace->inner.push_back(rec);
    res.power = next;
    res.iterations = k;
    prev_obj = sol.objective_value;
    if (rec.converged) {
      res.converged = true;
      break;
    }
  }
  return res;
}

}  // namespace

Step2Result step2_solve(const Scenario& s, const Allocation& assoc, const sca::Step2Iterate& init,
                        const SolverConfig& cfg, SolveTrace* trace, int outer) {
  auto res = step2_pass(s, assoc, init, cfg, trace, outer, true);
  if (res.feasible) return res;
  note(trace, "step 2: load bound infeasible, solving without it");
  return step2_pass(s, assoc, init, cfg, trace, outer, false);
}

Allocation round_allocation(const sca::Step1Iterate& relaxed, const Matrix& power) {
  const auto R = relaxed.alpha.rows(), N = relaxed.alpha.cols(), B = relaxed.beta.cols();
  Allocation a;
  a.mode = AllocationMode::integer;
  a.alpha = Matrix::Zero(R, N);
  a.beta = Matrix::Zero(R, B);
  a.y = Vector::Zero(R);
  a.power = power;
  for (Eigen::Index n = 0; n < N; ++n) {
    Eigen::Index best = 0;
    for (Eigen::Index r = 1; r < R; ++r)
      if (relaxed.alpha(r, n) > relaxed.alpha(best, n)) best = r;
    a.alpha(best, n) = 1.0;
    a.y[best] = 1.0;
  }
  for (Eigen::Index r = 0; r < R; ++r) {
    if (a.y[r] == 0.0) continue;
    Eigen::Index best = 0;
    for (Eigen::Index b = 1; b < B; ++b)
      if (relaxed.beta(r, b) > relaxed.beta(r, best)) best = b;
    a.beta(r, best) = 1.0;
  }
  return a;
}

std::optional<Matrix> min_exact_power(const Scenario& s, const Allocation& a, double margin) {
  const int R = s.num_rrhs(), N = s.num_users();
  std::vector<std::pair<int, int>> served;
  for (int r = 0; r < R; ++r)
    for (int n = 0; n < N; ++n)
      if (a.alpha(r, n) == 1.0) served.emplace_back(r, n);
  Matrix P = Matrix::Zero(R, N);
  const auto k = static_cast<Eigen::Index>(served.size());
  if (k == 0) return P;
  // p_i = theta_i (sigma^2 + sum_j G_ij p_j), theta_i = (2^R' - 1) N / ((F - N + 1) h)
  Matrix A = Matrix::Identity(k, k);
  Vector rhs(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    const auto [r, n] = served[i];
    const int load = load_of(a, r);
    const double F = s.antennas[r];
    if (load > F) return std::nullopt;
    const double theta = (std::exp2(s.rate_req[n] * (1 + margin)) - 1) * load / ((F - load + 1) * s.gain(r, n));
    rhs[i] = theta * s.noise();
    for (Eigen::Index j = 0; j < k; ++j) {
      const auto [rp, np] = served[j];
      if (rp != r && np != n) A(i, j) -= theta * s.gain(rp, n);
    }
  }
  const Vector p = A.partialPivLu().solve(rhs);
  if (!p.allFinite()) return std::nullopt;
  for (Eigen::Index i = 0; i < k; ++i) {
    if (!(p[i] >= 0) || (rhs[i] > 0 && !(p[i] > 0))) return std::nullopt;
    P(served[i].first, served[i].second) = p[i];
  }
  if ((A * p - rhs).cwiseAbs().maxCoeff() > 1e-9 * std::max(rhs.cwiseAbs().maxCoeff(), 1e-300)) return std::nullopt;
  for (int r = 0; r < R; ++r)
    if (row_power(P, r) > s.config.p_max) return std::nullopt;
  return P;
}

namespace {

// y_r = [r serves anyone]; beta rows of idle RRHs and powers of unserved pairs cleared.
void normalize(Allocation& a) {
  for (Eigen::Index r = 0; r < a.alpha.rows(); ++r) {
    a.y[r] = a.alpha.row(r).maxCoeff() == 1.0 ? 1.0 : 0.0;
    if (a.y[r] == 0.0) a.beta.row(r).setZero();
  }
  a.power = a.power.cwiseProduct(a.alpha);
}

void mask_power(Allocation& a) { a.power = a.power.cwiseProduct(a.alpha); }

struct Packer {
  const Vector& load;
  const std::vector<double>& cap;
  std::vector<int> order;
  std::vector<double> used;
  std::vector<int> pick;
  long budget = 1000000;

  bool place(std::size_t i) {
    if (i == order.size()) return true;
    if (--budget < 0) return false;
    const int r = order[i];
    for (std::size_t b = 0; b < cap.size(); ++b) {
      if (used[b] + load[r] > cap[b]) continue;
      used[b] += load[r];
      pick[r] = static_cast<int>(b);
      if (place(i + 1)) return true;
      used[b] -= load[r];
    }
    return false;
  }
};

}  // namespace

bool pack_bbus(const Scenario& s, Allocation& a) {
  const int R = s.num_rrhs(), N = s.num_users(), B = s.num_bbus();
  Vector load = Vector::Zero(R);
  try {
    for (int r = 0; r < R; ++r)
      for (int n = 0; n < N; ++n)
        if (a.alpha(r, n) == 1.0) load[r] += exact_rate(a, s, r, n);
  } catch (const ModelDomainError&) {
    return false;
  }
  auto bbu_loads = [&](const std::vector<int>& assign) {
    std::vector<double> used(B, 0.0);
    for (int r = 0; r < R; ++r)
      if (assign[r] >= 0) used[assign[r]] += load[r];
    return used;
  };
  auto overloaded = [&](const std::vector<double>& used) {
    int worst = -1;
    double excess = 0.0;
    for (int b = 0; b < B; ++b)
      if (used[b] - s.bbu_capacity[b] > excess) excess = used[b] - s.bbu_capacity[b], worst = b;
    return worst;
  };
  auto commit = [&](const std::vector<int>& assign) {
    a.beta.setZero();
    for (int r = 0; r < R; ++r)
      if (assign[r] >= 0) a.beta(r, assign[r]) = 1.0;
    return true;
  };

  std::vector<int> assign(R, -1);
  bool valid = true;
  for (int r = 0; r < R; ++r) {
    const double attached = a.beta.row(r).sum();
    if (a.y[r] == 1.0) {
      valid &= attached == 1.0;
      if (attached > 0) a.beta.row(r).maxCoeff(&assign[r]);
    } else {
      valid &= attached == 0.0;
    }
  }
  if (valid && overloaded(bbu_loads(assign)) < 0) return true;

  for (int r = 0; r < R; ++r) {
    if (a.y[r] != 1.0) {
      assign[r] = -1;
    } else if (assign[r] < 0) {
      const auto used = bbu_loads(assign);
      int best = 0;
      for (int b = 1; b < B; ++b)
        if (s.bbu_capacity[b] - used[b] > s.bbu_capacity[best] - used[best]) best = b;
      assign[r] = best;
    }
  }
  for (int round = 0; round < R; ++round) {
    const auto used = bbu_loads(assign);
    const int b = overloaded(used);
    if (b < 0) return commit(assign);
    int mover = -1;
    for (int r = 0; r < R; ++r)
      if (assign[r] == b && load[r] > 0 && (mover < 0 || load[r] < load[mover])) mover = r;
    int target = -1;
    for (int c = 0; c < B; ++c)
      if (c != b && (target < 0 || s.bbu_capacity[c] - used[c] > s.bbu_capacity[target] - used[target])) target = c;
    if (mover < 0 || target < 0) break;
    assign[mover] = target;
  }
  if (overloaded(bbu_loads(assign)) < 0) return commit(assign);

  Packer pk{load, s.bbu_capacity, {}, std::vector<double>(B, 0.0), std::vector<int>(R, -1)};
  for (int r = 0; r < R; ++r)
    if (a.y[r] == 1.0) pk.order.push_back(r);
  std::stable_sort(pk.order.begin(), pk.order.end(), [&](int x, int y) { return load[x] > load[y]; });
  if (!pk.place(0)) return false;
  return commit(pk.pick);
}

std::optional<Allocation> polish_allocation(const Scenario& s, const Allocation& a, double margin) {
  Allocation c = a;
  mask_power(c);
  const auto P = min_exact_power(s, c, margin);
  if (!P) return std::nullopt;
  c.power = *P;
  if (!pack_bbus(s, c)) return std::nullopt;
  if (!validate_solution(s, c).feasible()) return std::nullopt;
  return c;
}

Allocation repair_feasibility(const Scenario& s, const Allocation& a0, const SolverConfig& cfg, SolveTrace* trace) {
  a0.check_shape(s);
  if (validate_solution(s, a0).feasible()) return a0;
  const int R = s.num_rrhs(), N = s.num_users();

  for (int n = 0; n < N; ++n) {
    double best = 0.0;
    for (int r = 0; r < R; ++r)
      best = std::max(best, std::log2(1.0 + s.antennas[r] * s.config.p_max * s.gain(r, n) / s.noise()));
    if (best < s.rate_req[n])
      throw InfeasibleError("user " + std::to_string(n) + " cannot reach its rate even alone at p_max");
  }
  double demand = 0.0, capacity = 0.0;
  for (double v : s.rate_req) demand += v;
  for (double v : s.bbu_capacity) capacity += v;
  if (demand > capacity) throw InfeasibleError("total rate demand exceeds total BBU capacity");

  Allocation a = a0;
  normalize(a);
  Scenario inflated = s;
  for (double& v : inflated.rate_req) v *= 1.0 + cfg.margin;

  for (int round = 0; round < R + N; ++round) {
    const auto rep = validate_solution(s, a);
    if (rep.feasible()) return a;
    if (!rep.check("C1").passed || !rep.check("C2").passed) {
      if (auto P = min_exact_power(s, a, cfg.margin)) {
        a.power = *P;
        note(trace, "repair: exact minimum powers");
      } else {
        bool fixed = false;
        try {
          const auto r2 = step2_solve(inflated, a, sca::Step2Iterate{a.power}, cfg, nullptr, -1);
          if (r2.feasible) {
            Allocation b = a;
            b.power = r2.power;
            const auto rb = validate_solution(s, b);
            if (rb.check("C1").passed && rb.check("C2").passed) {
              a = b;
              fixed = true;
              note(trace, "repair: step 2 with inflated rates");
            }
          }
        } catch (const Error&) {
        }
        if (!fixed) {
          const Vector rates = [&] {
            try {
              return user_rates(a, s);
            } catch (const ModelDomainError&) {
              return Vector(Vector::Zero(N));
            }
          }();
          int worst = 0;
          for (int n = 1; n < N; ++n)
            if (s.rate_req[n] - rates[n] > s.rate_req[worst] - rates[worst]) worst = n;
          int wake = -1;
          for (int r = 0; r < R; ++r)
            if (a.y[r] == 0.0 && (wake < 0 || s.gain(r, worst) > s.gain(wake, worst))) wake = r;
          if (wake < 0) throw InfeasibleError("repair exhausted: no switched-off RRH left to activate");
          a.alpha.col(worst).setZero();
          a.alpha(wake, worst) = 1.0;
          normalize(a);
          note(trace, "repair: activate RRH " + std::to_string(wake) + " for user " + std::to_string(worst));
        }
      }
      continue;
    }
    if (!pack_bbus(s, a)) {
      const auto P = min_exact_power(s, a, cfg.margin);
      if (!P) throw InfeasibleError("repair exhausted: RRH loads do not fit the BBUs");
      a.power = *P;
      if (!pack_bbus(s, a)) throw InfeasibleError("repair exhausted: RRH loads do not fit the BBUs");
      note(trace, "repair: exact minimum powers before BBU reassignment");
    }
    note(trace, "repair: BBU reassignment");
  }
  if (validate_solution(s, a).feasible()) return a;
  throw InfeasibleError("repair exhausted after " + std::to_string(R + N) + " rounds");
}

Allocation consolidate(const Scenario& s, const Allocation& a, const Vector& y_relaxed, const SolverConfig& cfg,
                       SolveTrace* trace) {
  const int R = s.num_rrhs(), N = s.num_users();
  Allocation best = a;
  double best_u = utility(best, s);
  auto improves = [&](double u) { return u < best_u - 1e-12 * std::max(1.0, std::abs(best_u)); };
  if (auto p = polish_allocation(s, a, cfg.margin); p && improves(utility(*p, s))) {
    best = *p;
    best_u = utility(best, s);
    note(trace, "consolidate: exact power polish");
  }
  std::vector<int> order(R);
  for (int r = 0; r < R; ++r) order[r] = r;
  std::stable_sort(order.begin(), order.end(), [&](int x, int y) { return y_relaxed[x] < y_relaxed[y]; });

  for (bool changed = true; changed;) {
    changed = false;
    for (int r : order) {
      if (best.y[r] == 0.0 || best.active_rrh_count() <= 1) continue;
      Allocation c = best;
      bool movable = true;
      for (int n = 0; n < N && movable; ++n) {
        if (c.alpha(r, n) != 1.0) continue;
        int to = -1;
        for (int q = 0; q < R; ++q)
          if (q != r && c.y[q] == 1.0 && (to < 0 || s.gain(q, n) > s.gain(to, n))) to = q;
        if (to < 0) movable = false;
        else c.alpha(r, n) = 0.0, c.alpha(to, n) = 1.0;
      }
      if (!movable) continue;
      normalize(c);
      const auto p = polish_allocation(s, c, cfg.margin);
      if (!p || !improves(utility(*p, s))) continue;
      best = *p;
      best_u = utility(best, s);
      changed = true;
      note(trace, "consolidate: switch off RRH " + std::to_string(r));
    }
  }
  return best;
}

Solution evaluate_solution(const Scenario& s, const Allocation& a) {
  Solution sol;
  sol.allocation = a;
  sol.report = validate_solution(s, a);
  sol.utility = utility(a, s);
  try {
    sol.rates = user_rates(a, s);
  } catch (const ModelDomainError&) {
    sol.rates = Vector::Zero(s.num_users());
  }
  return sol;
}

Solution outer_solve(const Scenario& s, const SolverConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  s.validate();
  cfg.validate();
  const int R = s.num_rrhs(), N = s.num_users(), B = s.num_bbus();
  SolveTrace trace;

  const Matrix P0 = Matrix::Constant(R, N, s.config.p_max / N);
  const Matrix assoc = max_sinr_association(s, P0);
  sca::Step1Iterate it;
  it.alpha = Matrix::Constant(R, N, R > 1 ? 0.1 / (R - 1) : 1.0);
  for (int n = 0; n < N; ++n)
    for (int r = 0; r < R; ++r)
      if (assoc(r, n) == 1.0) it.alpha(r, n) = R > 1 ? 0.9 : 1.0;
  it.beta = Matrix::Constant(R, B, 1.0 / B);
  it.y = Vector::Ones(R);

  Allocation cur = round_allocation(it, P0);
  mask_power(cur);
  Matrix P = cur.power;
  const auto r0 = step2_solve(s, cur, sca::Step2Iterate{P}, cfg, &trace, 0);
  if (r0.feasible) {
    P = r0.power;
  } else {
    for (int r = 0; r < R; ++r) {
      const double load = load_of(cur, r);
      for (int n = 0; n < N; ++n)
        if (cur.alpha(r, n) == 1.0)
          P(r, n) = std::min(s.config.p_max, load * std::exp2(s.rate_req[n]) * s.noise() / (s.antennas[r] * s.gain(r, n)));
    }
    note(&trace, "init: step 2 infeasible, closed-form powers");
  }

  for (int t = 1; t <= cfg.max_outer_iter; ++t) {
    Step1Result r1;
    try {
      r1 = step1_solve(s, sca::Step1Inputs::from_power(s, P), it, cfg, &trace, t);
    } catch (const InfeasibleError& e) {
      note(&trace, std::string("outer: ") + e.what());
      break;
    }
    Allocation rounded = round_allocation(r1.iterate, P);
    mask_power(rounded);
    const auto r2 = step2_solve(s, rounded, sca::Step2Iterate{rounded.power}, cfg, &trace, t);
    OuterRecord rec;
    rec.outer = t;
    rec.d_alpha = max_abs_diff(r1.iterate.alpha, it.alpha);
    rec.d_beta = max_abs_diff(r1.iterate.beta, it.beta);
    rec.d_y = max_abs_diff(r1.iterate.y, it.y);
    const Matrix Pn = r2.feasible ? r2.power : rounded.power;
    rec.d_power = max_abs_diff(Pn, P);
    rec.converged = rec.d_alpha <= cfg.eps1 && rec.d_beta <= cfg.eps2 && rec.d_y <= cfg.eps3 && rec.d_power <= cfg.eps4;
    trace.outer.push_back(rec);
    it = r1.iterate;
    P = Pn;
    if (!r2.feasible) {
      note(&trace, "outer: step 2 infeasible on the rounded association");
      break;
    }
    if (rec.converged) break;
  }

  Allocation a = round_allocation(it, P);
  mask_power(a);
  a = repair_feasibility(s, a, cfg, &trace);
  if (cfg.rounding == RoundingPolicy::consolidate) a = consolidate(s, a, it.y, cfg, &trace);

  Solution sol = evaluate_solution(s, a);
  if (!sol.report.feasible()) throw InvariantError("solver produced an infeasible allocation: " + sol.report.summary());
  sol.trace = std::move(trace);
  sol.solve_time_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return sol;
}

}  // namespace cran
