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

#include "cran/baseline.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <tuple>

#include <omp.h>

namespace cran {

PowerGrid PowerGrid::log_spaced(int count, double lo, double p_max) {
  if (count < 1 || !(lo > 0) || !(lo <= p_max)) throw std::invalid_argument("bad power grid parameters");
  PowerGrid g;
  g.levels.push_back(0.0);
  if (count == 1) {
    g.levels.push_back(p_max);
    return g;
  }
  const double step = std::log(p_max / lo) / (count - 1);
  for (int i = 0; i < count; ++i) g.levels.push_back(i + 1 == count ? p_max : lo * std::exp(step * i));
  return g;
}

void PowerGrid::validate(double p_max) const {
  if (levels.empty()) throw InvariantError("power grid is empty");
  for (std::size_t i = 0; i < levels.size(); ++i) {
    if (!(levels[i] >= 0) || levels[i] > p_max) throw InvariantError("power grid level outside [0, p_max]");
    if (i > 0 && !(levels[i] > levels[i - 1])) throw InvariantError("power grid must be strictly increasing");
  }
}

Matrix max_sinr_association(const Scenario& s, const Matrix& p_ref) {
  const int R = s.num_rrhs(), N = s.num_users();
  if (p_ref.rows() != R || p_ref.cols() != N || !(p_ref.array() > 0).all())
    throw InvariantError("reference powers must be a positive R x N matrix");
  const Matrix I = interference_matrix(p_ref, s);
  Matrix alpha = Matrix::Zero(R, N);
  for (int n = 0; n < N; ++n) {
    int best = 0;
    double best_sinr = -1.0;
    for (int r = 0; r < R; ++r) {
      const double v = p_ref(r, n) * s.gain(r, n) / (s.noise() + I(r, n));
      if (v > best_sinr) best_sinr = v, best = r;
    }
    alpha(best, n) = 1.0;
  }
  return alpha;
}

Solution baseline_solve(const Scenario& s, const SolverConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  s.validate();
  cfg.validate();
  const int R = s.num_rrhs(), N = s.num_users(), B = s.num_bbus();
  SolveTrace trace;

  const Matrix P0 = Matrix::Constant(R, N, s.config.p_max / N);
  Allocation a = Allocation::zeros(s);
  a.alpha = max_sinr_association(s, P0);
  a.y = Vector::Ones(R);
  a.power = P0.cwiseProduct(a.alpha);

  sca::Step1Iterate it;
  it.alpha = a.alpha.cwiseMax(sca::kRelaxedFloor);
  it.beta = Matrix::Constant(R, B, 1.0 / B);
  it.y = Vector::Ones(R);
  try {
    const auto r1 = step1_solve(s, sca::Step1Inputs::from_power(s, a.power), it, cfg, &trace, 1, true);
    it.beta = r1.iterate.beta;
  } catch (const InfeasibleError&) {
    trace.log.push_back("baseline: BBU step infeasible, packing instead");
  }
  for (int r = 0; r < R; ++r) {
    Eigen::Index b = 0;
    it.beta.row(r).maxCoeff(&b);
    a.beta.row(r).setZero();
    a.beta(r, b) = 1.0;
  }

  const auto r2 = step2_solve(s, a, sca::Step2Iterate{a.power}, cfg, &trace, 1);
  if (r2.feasible) a.power = r2.power;

  Allocation out;
  if (auto p = polish_allocation(s, a, cfg.margin)) {
    out = *p;
  } else {
    out = a;
    if (!pack_bbus(s, out) || !validate_solution(s, out).feasible())
      throw InfeasibleError("baseline association cannot meet the rate and capacity constraints");
  }
  Solution sol = evaluate_solution(s, out);
  if (!sol.report.feasible()) throw InvariantError("baseline produced an infeasible allocation: " + sol.report.summary());
  sol.trace = std::move(trace);
  sol.solve_time_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return sol;
}

double oracle_search_size(const Scenario& s, const PowerGrid& grid) {
  const double R = s.num_rrhs(), N = s.num_users(), B = s.num_bbus(), G = static_cast<double>(grid.levels.size());
  return std::pow(R, N) * std::pow(B, R) * std::pow(G, N);
}

namespace {

struct Candidate {
  double utility = std::numeric_limits<double>::infinity();
  long long assoc = -1, power = -1, bbu = -1;
  bool operator<(const Candidate& o) const {
    return std::tie(utility, assoc, power, bbu) < std::tie(o.utility, o.assoc, o.power, o.bbu);
  }
};

}  // namespace

Solution brute_force_oracle(const Scenario& s, const PowerGrid& grid, double budget) {
  const auto t0 = std::chrono::steady_clock::now();
  s.validate();
  grid.validate(s.config.p_max);
  const double size = oracle_search_size(s, grid);
  if (size > budget) {
    char msg[128];
    std::snprintf(msg, sizeof msg, "oracle search size %.3g exceeds budget %.3g", size, budget);
    throw InstanceTooLargeError(msg);
  }
  const int R = s.num_rrhs(), N = s.num_users(), B = s.num_bbus();
  const int G = static_cast<int>(grid.levels.size());
  const double tol = 1e-9;

  std::vector<int> choices(N);
  long long num_assoc = 1;
  for (int n = 0; n < N; ++n) {
    choices[n] = R + (s.rate_req[n] == 0.0 ? 1 : 0);
    num_assoc *= choices[n];
  }

  auto decode_assoc = [&](long long code, std::vector<int>& server) {
    for (int n = N - 1; n >= 0; --n) {
      const int c = static_cast<int>(code % choices[n]);
      code /= choices[n];
      server[n] = c < R ? c : -1;
    }
  };
  auto build = [&](const std::vector<int>& server, long long pcode, Allocation& a, std::vector<int>& served) {
    a.alpha.setZero();
    a.power.setZero();
    a.y.setZero();
    served.clear();
    for (int n = 0; n < N; ++n)
      if (server[n] >= 0) served.push_back(n);
    for (int i = static_cast<int>(served.size()) - 1; i >= 0; --i) {
      const int n = served[i];
      a.alpha(server[n], n) = 1.0;
      a.y[server[n]] = 1.0;
      a.power(server[n], n) = grid.levels[pcode % G];
      pcode /= G;
    }
  };

  Candidate best;
#pragma omp parallel
  {
    Candidate local;
    Allocation a = Allocation::zeros(s);
    std::vector<int> server(N), served, active;
    Vector load(R);
#pragma omp for schedule(static)
    for (long long ac = 0; ac < num_assoc; ++ac) {
      decode_assoc(ac, server);
      std::vector<int> count(R, 0);
      for (int n = 0; n < N; ++n)
        if (server[n] >= 0) ++count[server[n]];
      bool domain = true;
      for (int r = 0; r < R; ++r) domain &= count[r] <= s.antennas[r];
      if (!domain) continue;
      long long num_power = 1;
      for (int n = 0; n < N; ++n)
        if (server[n] >= 0) num_power *= G;
      for (long long pc = 0; pc < num_power; ++pc) {
        build(server, pc, a, served);
        bool ok = true;
        for (int r = 0; r < R && ok; ++r) ok = row_power(a.power, r) - s.config.p_max <= tol * s.config.p_max;
        if (!ok) continue;
        load.setZero();
        for (int n = 0; n < N && ok; ++n) {
          const double need = s.rate_req[n];
          const double got = server[n] >= 0 ? exact_rate(a, s, server[n], n) : 0.0;
          ok = need - got <= tol * std::max(1.0, need);
          if (server[n] >= 0) load[server[n]] += got;
        }
        if (!ok) continue;
        double u = 0.0;
        active.clear();
        for (int r = 0; r < R; ++r) {
          u += row_power(a.power, r);
          if (a.y[r] == 1.0) active.push_back(r), u += s.config.cost_per_antenna * s.antennas[r];
        }
        if (!(u < local.utility)) continue;
        long long num_bbu = 1;
        for (std::size_t i = 0; i < active.size(); ++i) num_bbu *= B;
        for (long long bc = 0; bc < num_bbu; ++bc) {
          std::vector<double> used(B, 0.0);
          long long c = bc;
          for (int i = static_cast<int>(active.size()) - 1; i >= 0; --i) {
            used[c % B] += load[active[i]];
            c /= B;
          }
          bool fits = true;
          for (int b = 0; b < B; ++b) fits &= used[b] - s.bbu_capacity[b] <= tol * s.bbu_capacity[b];
          if (!fits) continue;
          const Candidate cand{u, ac, pc, bc};
          if (cand < local) local = cand;
          break;
        }
      }
    }
#pragma omp critical
    if (local < best) best = local;
  }
  if (best.assoc < 0) throw InfeasibleError("no feasible configuration on the power grid");

  Allocation a = Allocation::zeros(s);
  std::vector<int> server(N), served, active;
  decode_assoc(best.assoc, server);
  build(server, best.power, a, served);
  for (int r = 0; r < R; ++r)
    if (a.y[r] == 1.0) active.push_back(r);
  long long c = best.bbu;
  for (int i = static_cast<int>(active.size()) - 1; i >= 0; --i) {
    a.beta(active[i], c % B) = 1.0;
    c /= B;
  }
  Solution sol = evaluate_solution(s, a);
  if (!sol.report.feasible()) throw InvariantError("oracle optimum fails validation: " + sol.report.summary());
  sol.solve_time_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return sol;
}

}  // namespace cran
