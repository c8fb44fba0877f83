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
#include <filesystem>
#include <fstream>
#include <random>

#include "cran/rate_model.hpp"
#include "cran/scenario.hpp"
#include "doctest.h"

using namespace cran;

namespace {

ScenarioConfig small_config(int R, int N, int B) {
  ScenarioConfig c;
  c.num_rrhs = R;
  c.num_users = N;
  c.num_bbus = B;
  return c;
}

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("cran_test_" + name);
}

}  // namespace

TEST_CASE("channel gain values") {
  CHECK(channel_gain(0.0) == 1.0);
  CHECK(channel_gain(1.0) == 0.5);
  CHECK(channel_gain(2.0) == doctest::Approx(1.0 / 17.0).epsilon(1e-15));
  CHECK_THROWS_AS(channel_gain(-0.1), std::invalid_argument);
}

TEST_CASE("channel gain is strictly decreasing and in (0,1]") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  for (int i = 0; i < 1000; ++i) {
    double a = u(rng), b = u(rng);
    if (a == b) continue;
    if (a > b) std::swap(a, b);
    CHECK(channel_gain(a) > channel_gain(b));
    CHECK(channel_gain(b) > 0.0);
    CHECK(channel_gain(a) <= 1.0);
  }
}

TEST_CASE("generation is deterministic and respects ranges") {
  auto c = small_config(5, 20, 2);
  c.rng_seed = 42;
  const auto a = generate_scenario(c);
  const auto b = generate_scenario(c);
  CHECK(a == b);
  CHECK(a.gain == b.gain);
  for (int f : a.antennas) {
    CHECK(f >= 100);
    CHECK(f <= 200);
  }
  for (double l : a.bbu_capacity) {
    CHECK(l >= 2.0);
    CHECK(l <= 24.0);
  }
  for (const auto& p : a.user_positions) {
    CHECK(p.x >= 0.0);
    CHECK(p.x <= 4.0);
    CHECK(p.y >= 0.0);
    CHECK(p.y <= 4.0);
  }
  c.rng_seed = 43;
  CHECK_FALSE(generate_scenario(c).gain == a.gain);
}

TEST_CASE("stored gains match positions") {
  const auto s = generate_scenario(small_config(7, 40, 3));
  REQUIRE(s.gain.rows() == 7);
  REQUIRE(s.gain.cols() == 40);
  double worst = 0;
  for (int r = 0; r < 7; ++r)
    for (int n = 0; n < 40; ++n) {
      const double dx = s.rrh_positions[r].x - s.user_positions[n].x;
      const double dy = s.rrh_positions[r].y - s.user_positions[n].y;
      const double d2 = dx * dx + dy * dy;
      worst = std::max(worst, std::abs(s.gain(r, n) - 1.0 / (1.0 + d2 * d2)));
    }
  CHECK(worst <= 1e-12);
}

TEST_CASE("layout puts one RRH at the center and the rest on a ring") {
  const auto pts = rrh_layout(5, 4.0);
  REQUIRE(pts.size() == 5);
  CHECK(pts[0].x == 2.0);
  CHECK(pts[0].y == 2.0);
  for (int k = 1; k < 5; ++k)
    CHECK(std::hypot(pts[k].x - 2.0, pts[k].y - 2.0) == doctest::Approx(4.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("user sitting on the RRH sees unit gain") {
  auto c = small_config(1, 1, 1);
  const auto s = make_scenario(c, {{2, 2}}, {{2, 2}}, {150}, {10.0});
  CHECK(s.gain(0, 0) == 1.0);
}

TEST_CASE("save and load round trip") {
  const auto s = generate_scenario(small_config(5, 12, 2));
  const auto path = temp_file("roundtrip.json");
  save_scenario(s, path);
  const auto t = load_scenario(path);
  CHECK(t == s);
  std::filesystem::remove(path);
}

TEST_CASE("config-only file expands to the generated scenario") {
  const auto c = small_config(3, 6, 2);
  const auto s = scenario_from_json(config_to_json(c));
  CHECK(s == generate_scenario(c));
}

TEST_CASE("out-of-range gain is an invariant violation") {
  const auto s = generate_scenario(small_config(2, 3, 1));
  auto j = scenario_to_json(s);
  j["channel_gain"][0][0] = 1.5;
  CHECK_THROWS_AS(scenario_from_json(j), InvariantError);
}

TEST_CASE("missing field is a parse error naming it") {
  const auto s = generate_scenario(small_config(2, 3, 1));
  auto j = scenario_to_json(s);
  j.erase("noise_power");
  try {
    scenario_from_json(j);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.field() == "noise_power");
    CHECK(std::string(e.what()).find("noise_power") != std::string::npos);
  }
}

TEST_CASE("malformed text is a parse error") {
  const auto path = temp_file("broken.json");
  {
    std::ofstream out(path);
    out << "{ \"num_rrhs\": 3, ";
  }
  CHECK_THROWS_AS(load_scenario(path), ParseError);
  std::filesystem::remove(path);
}

TEST_CASE("validate_solution: nobody served fails C2 for every user") {
  const auto s = generate_scenario(small_config(3, 5, 2));
  const auto a = Allocation::zeros(s);
  const auto rep = validate_solution(s, a);
  CHECK_FALSE(rep.feasible());
  CHECK_FALSE(rep.check("C2").passed);
  CHECK(rep.check("C2").violations.size() == 5);
  CHECK(rep.check("C1").passed);
}

TEST_CASE("validate_solution: power at the rate threshold has zero C2 slack") {
  auto c = small_config(1, 1, 1);
  c.rate_req = 0.3;
  const auto s = make_scenario(c, {{2, 2}}, {{2.5, 2.0}}, {120}, {10.0});
  auto a = Allocation::zeros(s);
  a.alpha(0, 0) = 1;
  a.y[0] = 1;
  a.beta(0, 0) = 1;
  // Inverse of log2(1 + F p h / sigma^2) = R with one user and no interference.
  const double h = 1.0 / (1.0 + std::pow(0.5, 4));
  a.power(0, 0) = (std::exp2(0.3) - 1.0) * 1e-6 / (120.0 * h);
  const auto rep = validate_solution(s, a);
  CHECK(rep.check("C2").passed);
  CHECK(rep.check("C2").worst_slack <= 1e-9);
  CHECK(exact_rate(a, s, 0, 0) == doctest::Approx(0.3).epsilon(1e-12));
}

TEST_CASE("validate_solution: excess power fails C1 with its slack") {
  auto c = small_config(1, 2, 1);
  const auto s = make_scenario(c, {{2, 2}}, {{2.1, 2.0}, {1.9, 2.0}}, {120}, {24.0});
  auto a = Allocation::zeros(s);
  a.alpha.setOnes();
  a.y[0] = 1;
  a.beta(0, 0) = 1;
  a.power(0, 0) = 20.5;
  a.power(0, 1) = 20.5;
  const auto rep = validate_solution(s, a);
  CHECK_FALSE(rep.check("C1").passed);
  CHECK(rep.check("C1").worst_slack == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("validate_solution: shape and domain errors") {
  const auto s = generate_scenario(small_config(3, 5, 2));
  auto a = Allocation::zeros(s);
  a.alpha.resize(2, 5);
  CHECK_THROWS_AS(validate_solution(s, a), InvariantError);
  auto b = Allocation::zeros(s);
  b.alpha(0, 0) = 0.5;
  CHECK_THROWS_AS(validate_solution(s, b), InvariantError);
}
