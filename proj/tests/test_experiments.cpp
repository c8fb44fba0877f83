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

#include "cran/experiments.hpp"
#include "doctest.h"

using namespace cran;

namespace {

SweepSpec small_spec(SweepParam p, std::vector<double> values, int seeds) {
  SweepSpec s;
  s.param = p;
  s.values = std::move(values);
  s.seeds = seeds;
  s.base.num_rrhs = 3;
  s.base.num_users = 5;
  s.base.antennas_range = {140, 140};
  s.deterministic = true;
  return s;
}

}  // namespace

TEST_CASE("numbers carry nine significant digits") {
  CHECK(format_number(1.0 / 3.0) == "0.333333333");
  CHECK(format_number(123456789012.0) == "1.23456789e+11");
  CHECK(format_number(0.25) == "0.25");
  CHECK(format_number(std::nan("")) == "nan");
}

TEST_CASE("sweep spec validation") {
  CHECK_THROWS_AS(small_spec(SweepParam::users, {}, 1).validate(), InvariantError);
  CHECK_THROWS_AS(small_spec(SweepParam::users, {4}, 0).validate(), InvariantError);
  CHECK_THROWS_AS(small_spec(SweepParam::users, {4.5}, 1).validate(), InvariantError);
  CHECK_THROWS_AS(small_spec(SweepParam::rate, {-0.1}, 1).validate(), InvariantError);
  CHECK_NOTHROW(small_spec(SweepParam::rate, {0.0, 0.2}, 1).validate());
  CHECK(sweep_param_from_string("rate") == SweepParam::rate);
  CHECK_THROWS(sweep_param_from_string("power"));
}

TEST_CASE("point configs vary the swept field and the seed") {
  auto spec = small_spec(SweepParam::users, {4, 6}, 3);
  spec.base.rng_seed = 10;
  const auto c = point_config(spec, 6, 2);
  CHECK(c.num_users == 6);
  CHECK(c.rng_seed == 12);
  spec.param = SweepParam::rate;
  CHECK(point_config(spec, 0.4, 0).rate_req == 0.4);
}

TEST_CASE("user sweep emits algorithms x seeds rows per point in order") {
  const auto spec = small_spec(SweepParam::users, {4, 6}, 2);
  const auto r = run_user_sweep(spec);
  REQUIRE(r.rows.size() == 2 * 2 * 2);
  for (std::size_t i = 0; i < r.rows.size(); ++i) {
    CHECK(r.rows[i].point == spec.values[i / 4]);
    CHECK(r.rows[i].seed == spec.base.rng_seed + (i / 2) % 2);
    CHECK(r.rows[i].algo == (i % 2 == 0 ? "proposed" : "baseline"));
  }
  const auto csv = results_csv(r.rows, r.param);
  CHECK(csv.rfind("N,seed,algo,status,total_tx_power,throughput,EE,active_rrh_count,utility,solve_time_ms\n", 0) == 0);
  CHECK(csv.back() == '\n');
  CHECK_THROWS_AS(run_rate_sweep(spec), InvariantError);
}

TEST_CASE("EE times utility equals throughput on every row") {
  const auto r = run_sweep(small_spec(SweepParam::users, {4, 6}, 2));
  for (const auto& row : r.rows) {
    REQUIRE(row.status == "ok");
    CHECK(std::abs(row.ee * row.utility - row.throughput) <= 1e-9 * row.throughput);
  }
}

TEST_CASE("deterministic sweeps are byte-identical") {
  const auto spec = small_spec(SweepParam::users, {4}, 2);
  const auto a = run_sweep(spec), b = run_sweep(spec);
  CHECK(results_csv(a.rows, a.param) == results_csv(b.rows, b.param));
  CHECK(aggregate_csv(a.aggregate, a.param) == aggregate_csv(b.aggregate, b.param));
}

TEST_CASE("infeasible points are kept with a status") {
  const auto r = run_sweep(small_spec(SweepParam::rate, {0.3, 40.0}, 2));
  REQUIRE(r.rows.size() == 8);
  for (std::size_t i = 4; i < 8; ++i) {
    CHECK(r.rows[i].status == "infeasible");
    CHECK(std::isnan(r.rows[i].utility));
  }
  const auto agg = aggregate_rows(r.rows);
  REQUIRE(agg.size() == 4);
  CHECK(agg[2].runs == 2);
  CHECK(agg[2].feasible == 0);
  CHECK_FALSE(r.violations.empty());
}

TEST_CASE("zero rate demand costs only the active antennas") {
  const auto r = run_sweep(small_spec(SweepParam::rate, {0.0}, 2));
  for (const auto& row : r.rows) {
    REQUIRE(row.status == "ok");
    CHECK(row.total_tx_power <= 1e-6);
    CHECK(std::fmod(row.utility - row.total_tx_power, 0.25 * 140) == doctest::Approx(0.0).epsilon(1e-9));
  }
}

TEST_CASE("aggregates are means over feasible runs") {
  std::vector<ResultRow> rows(3);
  rows[0] = {20, 1, "proposed", "ok", 1.0, 2.0, 0.5, 1, 4.0, 10.0};
  rows[1] = {20, 2, "proposed", "ok", 3.0, 4.0, 1.0, 2, 6.0, 30.0};
  rows[2] = {20, 3, "proposed", "infeasible", NAN, NAN, NAN, -1, NAN, NAN};
  const auto agg = aggregate_rows(rows);
  REQUIRE(agg.size() == 1);
  CHECK(agg[0].runs == 3);
  CHECK(agg[0].feasible == 2);
  CHECK(agg[0].total_tx_power == 2.0);
  CHECK(agg[0].utility == 5.0);
  CHECK(agg[0].active_rrh_count == 1.5);
  CHECK(agg[0].solve_time_ms == 20.0);
}

TEST_CASE("monotonicity check tolerates two percent") {
  std::vector<AggregateRow> agg(4);
  const double u[] = {10.0, 9.9, 9.0, 12.0};
  for (int i = 0; i < 4; ++i) {
    agg[i].point = 0.1 * (i + 1);
    agg[i].algo = "proposed";
    agg[i].utility = u[i];
  }
  const auto v = monotonicity_violations(agg);
  REQUIRE(v.size() == 1);
  CHECK(v[0].find("9.9") != std::string::npos);
}

TEST_CASE("results CSV round-trips through the parser") {
  const auto r = run_sweep(small_spec(SweepParam::rate, {0.2, 40.0}, 1));
  const auto csv = results_csv(r.rows, r.param);
  const auto parsed = parse_results_csv(csv);
  REQUIRE(parsed.size() == r.rows.size());
  CHECK(results_csv(parsed, SweepParam::rate) == csv);
  CHECK_THROWS_AS(parse_results_csv("x,y\n"), ParseError);
}

TEST_CASE("compare pairs proposed and baseline per point and seed") {
  const auto r = run_sweep(small_spec(SweepParam::users, {4, 6}, 2));
  const auto cmp = compare_rows(r.rows);
  REQUIRE(cmp.size() == 4);
  for (const auto& c : cmp) {
    CHECK(c.proposed_status == "ok");
    CHECK(c.baseline_status == "ok");
    CHECK(c.baseline_active == 3);
  }
  const auto csv = compare_csv(cmp, SweepParam::users);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);
}

TEST_CASE("manifest records the run") {
  ScenarioConfig c;
  c.rng_seed = 7;
  const auto m = make_manifest("solve", {{"x", 1}}, c, 12.5);
  CHECK(m["command"] == "solve");
  CHECK(m["seed"] == 7);
  CHECK(m["wall_time_ms"] == 12.5);
  CHECK_FALSE(m["version"].get<std::string>().empty());
  CHECK(m["config"] == config_to_json(c));
}
