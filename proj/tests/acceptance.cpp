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

// One PASS/FAIL line per acceptance criterion. Exit status is nonzero when any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <set>
#include <string>

#include "cran/experiments.hpp"

using namespace cran;

namespace {

constexpr double kLn2 = std::numbers::ln2;

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

ScenarioConfig reference_config(int users, std::uint64_t seed) {
  ScenarioConfig c;
  c.num_rrhs = 5;
  c.num_bbus = 2;
  c.num_users = users;
  c.antennas_range = {140, 140};
  c.rate_req = 0.3;
  c.rng_seed = seed;
  return c;
}

// Shared bookkeeping for the hard feasibility gate.
struct Gate {
  int checked = 0;
  int violations = 0;
  void record(const Scenario& s, const Solution& sol) {
    ++checked;
    if (!validate_solution(s, sol.allocation).feasible()) ++violations;
  }
};

Outcome criterion1() {
  using namespace gp;
  bool ok = true;
  std::string detail;
  {
    GpProgram p;
    const auto x = p.add_variable("x", 1e-6, 1e6), y = p.add_variable("y", 1e-6, 1e6);
    p.set_objective(Posynomial(Monomial::variable(x)) + Posynomial(Monomial::variable(y)));
    p.add_constraint(Monomial::variable(x, -1.0) * Monomial::variable(y, -1.0));
    const auto t0 = Clock::now();
    const auto sol = solve(p);
    const double t = seconds_since(t0);
    ok &= sol.status == GpStatus::optimal && std::abs(sol.objective_value - 2.0) <= 1e-4 && t < 1.0;
    detail += fmt("x+y: %.9g in %.3fs", sol.objective_value, t);
  }
  {
    GpProgram p;
    const auto x = p.add_variable("x", 1e-6, 1e6);
    p.set_objective(Monomial::variable(x));
    p.add_constraint(Monomial::variable(x, -1.0));
    const auto t0 = Clock::now();
    const auto sol = solve(p);
    const double t = seconds_since(t0);
    ok &= sol.status == GpStatus::optimal && std::abs(sol.objective_value - 1.0) <= 1e-4 && t < 1.0;
    detail += fmt("; x: %.9g in %.3fs", sol.objective_value, t);
  }
  return {ok, detail};
}

Outcome criterion2() {
  using namespace gp;
  const auto t0 = Clock::now();
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> terms(1, 6), nvar(1, 4);
  std::uniform_real_distribution<double> expo(-2, 2), logc(-3, 3), logx(-2, 2);
  double worst_bound = 0, worst_touch = 0, worst_sum = 0;
  for (int k = 0; k < 100; ++k) {
    const int V = nvar(rng);
    Posynomial g;
    for (int t = terms(rng); t > 0; --t) {
      Monomial m = Monomial::from_log(logc(rng));
      for (int v = 0; v < V; ++v) m *= Monomial::variable(v, expo(rng));
      g += m;
    }
    std::vector<double> x0(V);
    for (auto& v : x0) v = std::exp(logx(rng));
    const auto a = agma_monomialize(g, x0);
    double sum = 0;
    for (double w : a.weights) sum += w;
    worst_sum = std::max(worst_sum, std::abs(sum - 1));
    worst_touch = std::max(worst_touch, std::abs(eval(a.monomial, x0) / eval(g, x0) - 1));
    std::vector<double> x(V);
    for (int p = 0; p < 100; ++p) {
      for (auto& v : x) v = std::exp(logx(rng));
      worst_bound = std::max(worst_bound, eval(a.monomial, x) / eval(g, x) - 1);
    }
  }
  const double t = seconds_since(t0);
  const bool ok = worst_bound <= 1e-12 && worst_touch <= 1e-9 && worst_sum <= 1e-12 && t < 10;
  return {ok, fmt("max excess %.3g, touch error %.3g, weight-sum error %.3g, %.2fs", worst_bound, worst_touch,
                  worst_sum, t)};
}

Outcome criterion3() {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.05, 1.0);
  std::uniform_int_distribution<int> users(1, 12);
  double worst_value = 0, worst_deriv = 0;
  for (int k = 0; k < 50; ++k) {
    sca::Step1Iterate it;
    it.alpha.resize(1, users(rng));
    for (Eigen::Index i = 0; i < it.alpha.size(); ++i) it.alpha.data()[i] = u(rng);
    const double N0 = it.alpha.sum();
    const auto L = sca::dc_linearize_log_users(it, 0);
    worst_value = std::max(worst_value, std::abs(L(N0) - std::log2(N0)));
    const double h = 1e-5 * N0;
    const double fd = (std::log2(N0 + h) - std::log2(N0 - h)) / (2 * h);
    worst_deriv = std::max(worst_deriv, std::abs(L.slope - fd));
  }
  return {worst_value <= 1e-12 && worst_deriv <= 1e-6,
          fmt("value error %.3g, derivative error %.3g over 50 points", worst_value, worst_deriv)};
}

const gp::GpProgram::Inequality* find(const gp::GpProgram& g, const std::string& label) {
  for (const auto& c : g.inequalities())
    if (c.label == label) return &c;
  return nullptr;
}

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

Outcome criterion4() {
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<int> Rd(1, 3), Nd(1, 5), Bd(1, 2);
  std::uniform_real_distribution<double> u(0.05, 1.0), lp(-6, 0);
  double worst = 0;
  int constraints = 0;
  for (int k = 0; k < 20; ++k) {
    ScenarioConfig c;
    c.num_rrhs = Rd(rng);
    c.num_users = Nd(rng);
    c.num_bbus = Bd(rng);
    c.rng_seed = 100 + k;
    const auto s = generate_scenario(c);
    const int R = c.num_rrhs, N = c.num_users, B = c.num_bbus;

    sca::Step1Iterate prev;
    prev.alpha.resize(R, N);
    prev.beta.resize(R, B);
    prev.y.resize(R);
    for (Eigen::Index i = 0; i < prev.alpha.size(); ++i) prev.alpha.data()[i] = u(rng);
    for (Eigen::Index i = 0; i < prev.beta.size(); ++i) prev.beta.data()[i] = u(rng);
    for (Eigen::Index i = 0; i < prev.y.size(); ++i) prev.y[i] = u(rng);
    Matrix P = Matrix::Zero(R, N);
    for (int n = 0; n < N; ++n) P(n % R, n) = std::pow(10.0, lp(rng));
    const auto in = sca::Step1Inputs::from_power(s, P);
    const auto prog = sca::build_step1_gp(s, in, prev);
    const auto x0 = sca::step1_values(s, prev);

    // Original constraints with log2 N_r replaced by its linearization, which is exact at the expansion point.
    for (int n = 0; n < N; ++n) {
      double rate = 0;
      for (int r = 0; r < R; ++r)
        rate += prev.alpha(r, n) * (std::log2(s.antennas[r] * in.gamma(r, n)) - std::log2(prev.alpha.row(r).sum()));
      const auto* ci = find(prog, "C2.1~[" + std::to_string(n) + "]");
      if (!ci) continue;
      // neg / pos with pos - neg = rate - R: the ratio is 1 exactly when the rate meets R.
      const double v = gp::eval(ci->lhs, x0);
      double pos = 0;
      for (int r = 0; r < R; ++r) {
        const double a = std::log2(s.antennas[r] * in.gamma(r, n)), L = std::log2(prev.alpha.row(r).sum());
        pos += prev.alpha(r, n) * (std::max(a, 0.0) + 1 / kLn2 + std::max(-L, 0.0));
      }
      worst = std::max(worst, rel(v, (pos - (rate - s.rate_req[n])) / pos));
      ++constraints;
    }
    for (int b = 0; b < B; ++b) {
      const auto* ci = find(prog, "C5.1~[" + std::to_string(b) + "]");
      if (!ci) continue;
      double load = 0, pos = 0;
      for (int r = 0; r < R; ++r) {
        const double L = std::log2(prev.alpha.row(r).sum());
        for (int n = 0; n < N; ++n) {
          const double ab = prev.alpha(r, n) * prev.beta(r, b), a = std::log2(s.antennas[r] * in.gamma(r, n));
          load += ab * (a - L);
          pos += ab * (std::max(a, 0.0) + 1 / kLn2 + std::max(-L, 0.0));
        }
      }
      const double cap_side = pos - load + s.bbu_capacity[b];
      worst = std::max(worst, rel(gp::eval(ci->lhs, x0), pos / cap_side));
      ++constraints;
    }
    for (int r = 0; r < R; ++r) {
      const auto* ci = find(prog, "C6~[" + std::to_string(r) + "]");
      worst = std::max(worst, rel(gp::eval(ci->lhs, x0), (1 + prev.beta.row(r).sum()) / (1 + prev.y[r])));
      ++constraints;
    }

    Allocation a = Allocation::zeros(s);
    for (int n = 0; n < N; ++n) {
      Eigen::Index r;
      s.gain.col(n).maxCoeff(&r);
      a.alpha(r, n) = 1.0;
      a.y[r] = 1.0;
    }
    for (int r = 0; r < R; ++r)
      if (a.y[r] == 1.0) a.beta(r, r % B) = 1.0;
    const auto g = sca::build_step2_gp(s, a, sca::Step2Iterate{P});
    std::vector<double> x(g.served.size());
    for (auto& v : x) v = std::pow(10.0, lp(rng));
    a.power = g.power_from(x, R, N);
    for (const auto& [r, n] : g.served) {
      const auto* ci = find(g.program, "C2.2~[" + std::to_string(n) + "]");
      worst = std::max(worst, rel(gp::eval(ci->lhs, x), std::exp2(s.rate_req[n] - approx_rate(a, s, r, n))));
      ++constraints;
    }
    for (int b = 0; b < B; ++b) {
      const auto* ci = find(g.program, "C5.2~[" + std::to_string(b) + "]");
      if (!ci) continue;
      double bits = 0;
      for (const auto& [r, n] : g.served)
        if (a.beta(r, b) == 1.0)
          bits += std::log2(s.antennas[r] * a.power(r, n) * s.gain(r, n) /
                            (users_on_rrh(a, r) * (s.noise() + s.config.interference_threshold)));
      worst = std::max(worst, rel(gp::eval(ci->lhs, x), std::exp2(bits - s.bbu_capacity[b])));
      ++constraints;
    }
  }
  return {worst <= 1e-8, fmt("max relative mismatch %.3g over %.0f constraints", worst, constraints)};
}

Outcome criterion5(Gate& gate) {
  const int users[] = {10, 20, 30};
  int iterations = 0, violations = 0, rejected = 0, runs = 0;
  double worst = -1e300;
  for (int k = 0; k < 20; ++k) {
    const auto s = generate_scenario(reference_config(users[k % 3], 500 + k));
    Solution sol;
    try {
      sol = outer_solve(s);
    } catch (const InfeasibleError&) {
      continue;
    }
    ++runs;
    gate.record(s, sol);
    const auto& rows = sol.trace.inner;
    for (std::size_t i = 1; i < rows.size(); ++i) {
      const auto &a = rows[i - 1], &b = rows[i];
      if (a.outer != b.outer || a.step != b.step || b.inner != a.inner + 1) continue;
      if (a.objective == 0.0 || b.objective == 0.0) continue;  // no GP solution on one side
      ++iterations;
      if (!b.accepted) ++rejected;
      const double slack = b.objective - a.objective - 1e-6 * std::max(1.0, std::abs(a.objective));
      worst = std::max(worst, b.objective - a.objective);
      if (slack > 0) ++violations;
    }
  }
  return {violations == 0 && runs > 0,
          fmt("%.0f consecutive GP pairs over %.0f solved scenarios, %.0f increases beyond slack (largest step %.3g)",
              iterations, runs, violations, iterations ? worst : 0.0) +
              fmt(", %.0f safeguard rejections", rejected)};
}

Outcome criterion6(const Gate& gate, const std::vector<ResultRow>& rows) {
  int errors = 0, ok = 0;
  for (const auto& r : rows) {
    if (r.status == "error") ++errors;
    if (r.status == "ok") ++ok;
  }
  return {gate.violations == 0 && errors == 0,
          fmt("%.0f solutions re-validated directly (%.0f violations), %.0f sweep solutions validated in-solver, "
              "%.0f internal errors",
              gate.checked, gate.violations, ok, errors)};
}

Outcome criterion7(Gate& gate) {
  const auto t0 = Clock::now();
  std::vector<double> ratios;
  int oracle_feasible = 0, missed = 0, close = 0;
  for (int k = 0; k < 20; ++k) {
    ScenarioConfig c;
    c.num_rrhs = 2;
    c.num_users = 3;
    c.num_bbus = 1;
    c.antennas_range = {140, 140};
    c.rng_seed = 700 + k;
    const auto s = generate_scenario(c);
    Solution o;
    try {
      o = brute_force_oracle(s, PowerGrid::log_spaced(6, 1e-9, c.p_max));
    } catch (const InfeasibleError&) {
      continue;
    }
    ++oracle_feasible;
    try {
      const auto p = outer_solve(s);
      gate.record(s, p);
      ratios.push_back(p.utility / o.utility);
      if (ratios.back() <= 1.25) ++close;
    } catch (const InfeasibleError&) {
      ++missed;
    }
  }
  const double t = seconds_since(t0);
  std::sort(ratios.begin(), ratios.end());
  const double share = oracle_feasible ? static_cast<double>(close) / oracle_feasible : 0.0;
  std::string dist = "ratios";
  for (double r : ratios) dist += fmt(" %.4f", r);
  return {missed == 0 && oracle_feasible > 0 && share >= 0.8 && t < 60,
          fmt("%.0f grid-feasible, %.0f missed, %.0f%% within 1.25x, %.1fs; ", oracle_feasible, missed, 100 * share,
              t) +
              dist};
}

const ResultRow* find_row(const std::vector<ResultRow>& rows, double point, std::uint64_t seed, const char* algo) {
  for (const auto& r : rows)
    if (r.point == point && r.seed == seed && r.algo == algo) return &r;
  return nullptr;
}

Outcome criterion8(const std::vector<ResultRow>& rows) {
  int seeds = 0, few = 0, baseline_all = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto* p = find_row(rows, 20, seed, "proposed");
    const auto* b = find_row(rows, 20, seed, "baseline");
    if (!p || !b) continue;
    ++seeds;
    if (p->status == "ok" && p->active_rrh_count <= 2) ++few;
    if (b->status == "ok" && b->active_rrh_count == 5) ++baseline_all;
  }
  return {seeds == 10 && few >= 8 && baseline_all == 10,
          fmt("proposed <= 2 active RRHs in %.0f/%.0f seeds, baseline all 5 on in %.0f/%.0f", few, seeds, baseline_all,
              seeds)};
}

Outcome criterion9(const std::vector<ResultRow>& rows) {
  bool ok = true;
  int pairs = 0, wins = 0;
  std::string detail;
  for (double N : {50.0, 60.0, 70.0}) {
    double sp = 0, sb = 0, rp = 0, rb = 0;
    int both = 0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      const auto* p = find_row(rows, N, seed, "proposed");
      const auto* b = find_row(rows, N, seed, "baseline");
      if (!p || !b) continue;
      const bool pf = p->status == "ok", bf = b->status == "ok";
      if (!pf && !bf) continue;
      ++pairs;
      if (pf && bf) {
        ++both;
        sp += p->utility, sb += b->utility, rp += p->total_tx_power, rb += b->total_tx_power;
        if (p->utility <= b->utility) ++wins;
      } else if (pf) {
        ++wins;
      }
    }
    const double mp = sp / both, mb = sb / both;
    ok &= both > 0 && mp <= 0.9 * mb;
    detail += fmt("N=%.0f: mean cost %.4g vs %.4g (ratio %.3f)", N, mp, mb, mp / mb) +
              fmt(", radiated %.3g vs %.3g W; ", rp / both, rb / both);
  }
  const double share = pairs ? static_cast<double>(wins) / pairs : 0.0;
  ok &= share >= 0.9;
  return {ok, detail + fmt("proposed <= baseline in %.0f/%.0f pairs", wins, pairs)};
}

Outcome criterion10(const SweepResult& r) {
  std::string detail;
  for (const auto& a : r.aggregate)
    if (a.algo == "proposed")
      detail += fmt("R=%.1f: cost %.6g, radiated %.4g W, %.0f feasible; ", a.point, a.utility, a.total_tx_power, a.feasible);
  for (const auto& v : r.violations) detail += "violation: " + v + "; ";
  // Same statistic restricted to seeds feasible at every rate.
  std::map<std::uint64_t, int> ok;
  std::set<double> points;
  for (const auto& row : r.rows)
    if (row.algo == "proposed") {
      points.insert(row.point);
      if (row.status == "ok") ++ok[row.seed];
    }
  std::map<double, std::pair<double, int>> common;
  for (const auto& row : r.rows)
    if (row.algo == "proposed" && row.status == "ok" && ok[row.seed] == static_cast<int>(points.size())) {
      common[row.point].first += row.utility;
      ++common[row.point].second;
    }
  detail += "seeds feasible at every rate:";
  for (const auto& [pt, acc] : common) detail += fmt(" R=%.1f %.6g", pt, acc.first / acc.second);
  detail += fmt(" (%.0f seeds)", common.empty() ? 0.0 : common.begin()->second.second);
  return {r.violations.empty(), detail};
}

Outcome criterion11(const std::vector<ResultRow>& rows) {
  int checked = 0, bad = 0, csv_bad = 0;
  double worst = 0;
  for (const auto& r : rows) {
    if (r.status != "ok") continue;
    ++checked;
    const double e = std::abs(r.ee * r.utility - r.throughput) / r.throughput;
    worst = std::max(worst, e);
    if (e > 1e-9) ++bad;
  }
  for (const auto& r : parse_results_csv(results_csv(rows, SweepParam::users)))
    if (r.status == "ok" && std::abs(r.ee * r.utility - r.throughput) > 1e-9 * r.throughput) ++csv_bad;
  return {checked > 0 && bad == 0,
          fmt("%.0f rows, max relative error %.3g; after 9-digit CSV rounding %.0f rows exceed 1e-9", checked, worst,
              csv_bad)};
}

Outcome criterion12(const std::vector<ResultRow>& sweep_rows, double sweep_seconds) {
  double worst70 = 0;
  int runs70 = 0;
  for (const auto& r : sweep_rows)
    if (r.point == 70 && r.algo == "proposed" && r.status == "ok") worst70 = std::max(worst70, r.solve_time_ms), ++runs70;
  return {runs70 > 0 && worst70 < 60000 && sweep_seconds < 1800,
          fmt("slowest N=70 proposed solve %.1fs over %.0f runs; full user sweep %.1fs", worst70 / 1000, runs70,
              sweep_seconds)};
}

}  // namespace

int main() {
  int failures = 0;
  const auto report = [&](int id, const char* name, const Outcome& o) {
    std::cout << "criterion " << id << " [" << name << "]: " << (o.pass ? "PASS" : "FAIL") << " - " << o.detail
              << std::endl;
    if (!o.pass) ++failures;
  };
  Gate gate;
  report(1, "GP analytic optima", criterion1());
  report(2, "AGMA properties", criterion2());
  report(3, "DC linearization", criterion3());
  report(4, "expansion-point tightness", criterion4());
  report(5, "SCA monotonicity", criterion5(gate));
  const auto o7 = criterion7(gate);

  SweepSpec users;
  users.param = SweepParam::users;
  users.values = {20, 30, 40, 50, 60, 70};
  users.seeds = 5;
  users.base = reference_config(20, 1);
  const auto t0 = Clock::now();
  const auto main_sweep = run_sweep(users);
  const double sweep_seconds = seconds_since(t0);

  SweepSpec extra = users;
  extra.values = {20, 50, 60, 70};
  extra.base.rng_seed = 6;
  const auto more = run_sweep(extra);

  SweepSpec rates;
  rates.param = SweepParam::rate;
  rates.values = {0.1, 0.2, 0.3, 0.4};
  rates.seeds = 10;
  rates.base = reference_config(30, 1);
  const auto rate_sweep = run_sweep(rates);

  std::vector<ResultRow> user_rows = main_sweep.rows;
  user_rows.insert(user_rows.end(), more.rows.begin(), more.rows.end());
  std::vector<ResultRow> all_rows = user_rows;
  all_rows.insert(all_rows.end(), rate_sweep.rows.begin(), rate_sweep.rows.end());

  report(6, "feasibility gate", criterion6(gate, all_rows));
  report(7, "oracle comparison", o7);
  report(8, "switch-off at N=20", criterion8(user_rows));
  report(9, "cost reduction at N=50..70", criterion9(user_rows));
  report(10, "rate-sweep monotonicity", criterion10(rate_sweep));
  report(11, "EE identity", criterion11(all_rows));
  report(12, "runtime budget", criterion12(main_sweep.rows, sweep_seconds));
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures == 0 ? 0 : 1;
}
