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

#include "cran/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#ifndef CRAN_VERSION
#define CRAN_VERSION "0.1.0"
#endif

namespace cran {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

const char* point_column(SweepParam p) { return p == SweepParam::users ? "N" : "rate"; }

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& s) {
  if (s == "nan") return kNaN;
  std::size_t used = 0;
  const double v = std::stod(s, &used);
  if (used != s.size()) throw ParseError("csv", "bad number '" + s + "'");
  return v;
}

ResultRow failed_row(double point, std::uint64_t seed, const std::string& algo, const std::string& status) {
  ResultRow r;
  r.point = point;
  r.seed = seed;
  r.algo = algo;
  r.status = status;
  r.total_tx_power = r.throughput = r.ee = r.utility = r.solve_time_ms = kNaN;
  r.active_rrh_count = -1;
  return r;
}

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

const char* to_string(SweepParam p) { return p == SweepParam::users ? "users" : "rate"; }

SweepParam sweep_param_from_string(const std::string& s) {
  if (s == "users") return SweepParam::users;
  if (s == "rate") return SweepParam::rate;
  throw std::invalid_argument("unknown sweep parameter '" + s + "'");
}

void SweepSpec::validate() const {
  if (values.empty()) throw InvariantError("sweep needs at least one value");
  if (seeds < 1) throw InvariantError("sweep needs at least one seed");
  for (double v : values) {
    if (param == SweepParam::users && (v < 1 || v != std::floor(v)))
      throw InvariantError("user counts must be positive integers");
    if (param == SweepParam::rate && !(v >= 0)) throw InvariantError("rate requirements must be nonnegative");
  }
  solver.validate();
}

ScenarioConfig point_config(const SweepSpec& spec, double value, int seed_index) {
  ScenarioConfig c = spec.base;
  if (spec.param == SweepParam::users)
    c.num_users = static_cast<int>(value);
  else
    c.rate_req = value;
  c.rng_seed = spec.base.rng_seed + static_cast<std::uint64_t>(seed_index);
  c.validate();
  return c;
}

ResultRow row_from_solution(double point, std::uint64_t seed, const std::string& algo, const Scenario& s,
                            const Solution& sol) {
  ResultRow r;
  r.point = point;
  r.seed = seed;
  r.algo = algo;
  r.status = "ok";
  r.total_tx_power = radiated_power(sol.allocation);
  r.throughput = total_throughput(sol.allocation, s);
  r.utility = sol.utility;
  r.ee = energy_efficiency(sol.allocation, s);
  r.active_rrh_count = sol.allocation.active_rrh_count();
  r.solve_time_ms = sol.solve_time_ms;
  return r;
}

SweepResult run_sweep(const SweepSpec& spec) {
  spec.validate();
  const int P = static_cast<int>(spec.values.size());
  const int tasks = P * spec.seeds;
  std::vector<ResultRow> rows(2 * static_cast<std::size_t>(tasks));
#pragma omp parallel for schedule(dynamic)
  for (int t = 0; t < tasks; ++t) {
    const double value = spec.values[t / spec.seeds];
    const int k = t % spec.seeds;
    const ScenarioConfig cfg = point_config(spec, value, k);
    const Scenario s = generate_scenario(cfg);
    const auto run = [&](const std::string& algo, auto&& solve) {
      try {
        return row_from_solution(value, cfg.rng_seed, algo, s, solve());
      } catch (const InfeasibleError&) {
        return failed_row(value, cfg.rng_seed, algo, "infeasible");
      } catch (const std::exception&) {
        return failed_row(value, cfg.rng_seed, algo, "error");
      }
    };
    rows[2 * t] = run("proposed", [&] { return outer_solve(s, spec.solver); });
    rows[2 * t + 1] = run("baseline", [&] { return baseline_solve(s, spec.solver); });
  }
  if (spec.deterministic)
    for (auto& r : rows)
      if (r.status == "ok") r.solve_time_ms = 0.0;
  SweepResult out;
  out.param = spec.param;
  out.rows = std::move(rows);
  out.aggregate = aggregate_rows(out.rows);
  if (spec.param == SweepParam::rate) out.violations = monotonicity_violations(out.aggregate);
  return out;
}

SweepResult run_user_sweep(const SweepSpec& spec) {
  if (spec.param != SweepParam::users) throw InvariantError("user sweep needs the users parameter");
  return run_sweep(spec);
}

SweepResult run_rate_sweep(const SweepSpec& spec) {
  if (spec.param != SweepParam::rate) throw InvariantError("rate sweep needs the rate parameter");
  return run_sweep(spec);
}

std::vector<AggregateRow> aggregate_rows(const std::vector<ResultRow>& rows) {
  std::vector<AggregateRow> out;
  for (const auto& r : rows) {
    auto it = std::find_if(out.begin(), out.end(), [&](const AggregateRow& a) { return a.point == r.point && a.algo == r.algo; });
    if (it == out.end()) {
      out.push_back({});
      it = std::prev(out.end());
      it->point = r.point;
      it->algo = r.algo;
    }
    ++it->runs;
    if (r.status != "ok") continue;
    ++it->feasible;
    it->total_tx_power += r.total_tx_power;
    it->throughput += r.throughput;
    it->ee += r.ee;
    it->active_rrh_count += r.active_rrh_count;
    it->utility += r.utility;
    it->solve_time_ms += r.solve_time_ms;
  }
  for (auto& a : out) {
    const double k = a.feasible > 0 ? a.feasible : kNaN;
    a.total_tx_power /= k;
    a.throughput /= k;
    a.ee /= k;
    a.active_rrh_count /= k;
    a.utility /= k;
    a.solve_time_ms /= k;
  }
  return out;
}

std::vector<std::string> monotonicity_violations(const std::vector<AggregateRow>& agg, double rel_tol) {
  std::vector<const AggregateRow*> prop;
  for (const auto& a : agg)
    if (a.algo == "proposed") prop.push_back(&a);
  std::sort(prop.begin(), prop.end(), [](auto* x, auto* y) { return x->point < y->point; });
  std::vector<std::string> out;
  for (std::size_t i = 1; i < prop.size(); ++i) {
    const double lo = prop[i - 1]->utility, hi = prop[i]->utility;
    if (std::isnan(lo) || std::isnan(hi)) {
      out.push_back("point " + format_number(prop[i]->point) + ": no feasible runs to compare");
    } else if (hi < lo * (1 - rel_tol)) {
      out.push_back("mean proposed utility drops from " + format_number(lo) + " at " + format_number(prop[i - 1]->point) +
                    " to " + format_number(hi) + " at " + format_number(prop[i]->point));
    }
  }
  return out;
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::string results_csv(const std::vector<ResultRow>& rows, SweepParam param) {
  std::ostringstream os;
  os << point_column(param) << ",seed,algo,status,total_tx_power,throughput,EE,active_rrh_count,utility,solve_time_ms\n";
  for (const auto& r : rows)
    os << format_number(r.point) << ',' << r.seed << ',' << r.algo << ',' << r.status << ','
       << format_number(r.total_tx_power) << ',' << format_number(r.throughput) << ',' << format_number(r.ee) << ','
       << r.active_rrh_count << ',' << format_number(r.utility) << ',' << format_number(r.solve_time_ms) << '\n';
  return os.str();
}

std::string aggregate_csv(const std::vector<AggregateRow>& agg, SweepParam param) {
  std::ostringstream os;
  os << point_column(param)
     << ",algo,runs,feasible,total_tx_power,throughput,EE,active_rrh_count,utility,solve_time_ms\n";
  for (const auto& a : agg)
    os << format_number(a.point) << ',' << a.algo << ',' << a.runs << ',' << a.feasible << ','
       << format_number(a.total_tx_power) << ',' << format_number(a.throughput) << ',' << format_number(a.ee) << ','
       << format_number(a.active_rrh_count) << ',' << format_number(a.utility) << ','
       << format_number(a.solve_time_ms) << '\n';
  return os.str();
}

std::vector<ResultRow> parse_results_csv(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line)) throw ParseError("csv", "missing header");
  const auto head = split(line);
  if (head.size() != 10 || (head[0] != "N" && head[0] != "rate") || head[2] != "algo")
    throw ParseError("csv", "unexpected header '" + line + "'");
  std::vector<ResultRow> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto f = split(line);
    if (f.size() != 10) throw ParseError("csv", "expected 10 fields in '" + line + "'");
    ResultRow r;
    r.point = parse_double(f[0]);
    r.seed = std::stoull(f[1]);
    r.algo = f[2];
    r.status = f[3];
    r.total_tx_power = parse_double(f[4]);
    r.throughput = parse_double(f[5]);
    r.ee = parse_double(f[6]);
    r.active_rrh_count = std::stoi(f[7]);
    r.utility = parse_double(f[8]);
    r.solve_time_ms = parse_double(f[9]);
    rows.push_back(std::move(r));
  }
  return rows;
}

void write_sweep(const SweepResult& r, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const auto put = [&](const std::string& name, const std::string& body) {
    std::ofstream out(dir / name);
    if (!out) throw Error("cannot write " + (dir / name).string());
    out << body;
  };
  put("results.csv", results_csv(r.rows, r.param));
  put("aggregate.csv", aggregate_csv(r.aggregate, r.param));
  if (r.param == SweepParam::rate) {
    std::string body;
    for (const auto& v : r.violations) body += v + "\n";
    put("monotonicity.txt", body.empty() ? "mean proposed utility nondecreasing within 2%\n" : body);
  }
}

std::vector<CompareRow> compare_rows(const std::vector<ResultRow>& rows) {
  std::vector<CompareRow> out;
  std::map<std::pair<double, std::uint64_t>, std::size_t> index;
  for (const auto& r : rows) {
    const auto key = std::make_pair(r.point, r.seed);
    auto it = index.find(key);
    if (it == index.end()) {
      it = index.emplace(key, out.size()).first;
      CompareRow c;
      c.point = r.point;
      c.seed = r.seed;
      c.proposed_status = c.baseline_status = "missing";
      c.proposed_utility = c.baseline_utility = c.proposed_tx_power = c.baseline_tx_power = kNaN;
      c.proposed_active = c.baseline_active = -1;
      out.push_back(c);
    }
    auto& c = out[it->second];
    if (r.algo == "proposed") {
      c.proposed_status = r.status;
      c.proposed_utility = r.utility;
      c.proposed_tx_power = r.total_tx_power;
      c.proposed_active = r.active_rrh_count;
    } else if (r.algo == "baseline") {
      c.baseline_status = r.status;
      c.baseline_utility = r.utility;
      c.baseline_tx_power = r.total_tx_power;
      c.baseline_active = r.active_rrh_count;
    }
  }
  return out;
}

std::string compare_csv(const std::vector<CompareRow>& rows, SweepParam param) {
  std::ostringstream os;
  os << point_column(param)
     << ",seed,proposed_status,baseline_status,proposed_utility,baseline_utility,utility_ratio,"
        "proposed_tx_power,baseline_tx_power,proposed_active,baseline_active\n";
  for (const auto& c : rows)
    os << format_number(c.point) << ',' << c.seed << ',' << c.proposed_status << ',' << c.baseline_status << ','
       << format_number(c.proposed_utility) << ',' << format_number(c.baseline_utility) << ','
       << format_number(c.proposed_utility / c.baseline_utility) << ',' << format_number(c.proposed_tx_power) << ','
       << format_number(c.baseline_tx_power) << ',' << c.proposed_active << ',' << c.baseline_active << '\n';
  return os.str();
}

std::string solution_csv(const Scenario& s, const Solution& sol) {
  const auto& a = sol.allocation;
  std::ostringstream os;
  os << "rrh,user,bbu,power,rate\n";
  for (int n = 0; n < s.num_users(); ++n) {
    const int r = a.server_of(n);
    if (r < 0) continue;
    os << r << ',' << n << ',' << a.bbu_of(r) << ',' << format_number(a.power(r, n)) << ','
       << format_number(sol.rates[n]) << '\n';
  }
  return os.str();
}

std::string version_string() { return CRAN_VERSION; }

nlohmann::json make_manifest(const std::string& command, const nlohmann::json& args, const ScenarioConfig& config,
                             double wall_time_ms) {
  return {{"command", command},   {"args", args},         {"config", config_to_json(config)},
          {"seed", config.rng_seed}, {"version", version_string()}, {"wall_time_ms", wall_time_ms},
          {"finished_at", utc_now()}};
}

void write_json(const nlohmann::json& j, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace cran
