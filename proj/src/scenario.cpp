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

#include "cran/scenario.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "cran/rate_model.hpp"

namespace cran {

namespace {

// Platform-independent draws; std::uniform_*_distribution is not.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
  int uniform_int(int lo, int hi) {
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<int>(engine_() % span);
  }

 private:
  std::mt19937_64 engine_;
};

double distance(const Point& a, const Point& b) { return std::hypot(a.x - b.x, a.y - b.y); }

void require(bool ok, const std::string& what) {
  if (!ok) throw InvariantError("invariant violated: " + what);
}

}  // namespace

void ScenarioConfig::validate() const {
  require(num_rrhs >= 1, "num_rrhs >= 1");
  require(num_users >= 1, "num_users >= 1");
  require(num_bbus >= 1, "num_bbus >= 1");
  require(area_side > 0, "area_side > 0");
  require(antennas_range[0] >= 1 && antennas_range[0] <= antennas_range[1],
          "antennas_range is a nonempty interval of positive counts");
  require(bbu_load_range[0] > 0 && bbu_load_range[0] <= bbu_load_range[1],
          "bbu_load_range is a nonempty interval of positive loads");
  require(p_max > 0, "p_max > 0");
  require(rate_req >= 0, "rate_req >= 0");
  require(noise_power > 0, "noise_power > 0");
  require(cost_per_antenna >= 0, "cost_per_antenna >= 0");
  require(omega >= 0, "omega >= 1 (0 selects num_users)");
  require(interference_threshold >= 0, "interference_threshold >= 0");
}

double channel_gain(double d) {
  if (!(d >= 0)) throw std::invalid_argument("channel_gain: negative distance");
  const double d2 = d * d;
  return 1.0 / (1.0 + d2 * d2);
}

std::vector<Point> rrh_layout(int num_rrhs, double side) {
  std::vector<Point> out;
  const Point center{side / 2, side / 2};
  out.push_back(center);
  const int ring = num_rrhs - 1;
  for (int k = 0; k < ring; ++k) {
    const double phi = 2.0 * std::numbers::pi * k / ring;
    out.push_back({center.x + side / 3 * std::cos(phi), center.y + side / 3 * std::sin(phi)});
  }
  return out;
}

Scenario make_scenario(const ScenarioConfig& config, std::vector<Point> rrhs,
                       std::vector<Point> users, std::vector<int> antennas,
                       std::vector<double> bbu_capacity) {
  Scenario s;
  s.config = config;
  s.config.omega = config.effective_omega();
  s.rrh_positions = std::move(rrhs);
  s.user_positions = std::move(users);
  s.antennas = std::move(antennas);
  s.bbu_capacity = std::move(bbu_capacity);
  s.rate_req.assign(s.user_positions.size(), config.rate_req);
  s.gain.resize(static_cast<Eigen::Index>(s.rrh_positions.size()),
                static_cast<Eigen::Index>(s.user_positions.size()));
  for (std::size_t r = 0; r < s.rrh_positions.size(); ++r)
    for (std::size_t n = 0; n < s.user_positions.size(); ++n)
      s.gain(r, n) = channel_gain(distance(s.rrh_positions[r], s.user_positions[n]));
  s.validate();
  return s;
}

Scenario generate_scenario(const ScenarioConfig& config) {
  config.validate();
  Rng rng(config.rng_seed);
  std::vector<Point> users(config.num_users);
  for (auto& u : users) {
    u.x = rng.uniform(0.0, config.area_side);
    u.y = rng.uniform(0.0, config.area_side);
  }
  std::vector<int> antennas(config.num_rrhs);
  for (auto& f : antennas) f = rng.uniform_int(config.antennas_range[0], config.antennas_range[1]);
  std::vector<double> capacity(config.num_bbus);
  for (auto& l : capacity) l = rng.uniform(config.bbu_load_range[0], config.bbu_load_range[1]);
  return make_scenario(config, rrh_layout(config.num_rrhs, config.area_side), std::move(users),
                       std::move(antennas), std::move(capacity));
}

void Scenario::validate() const {
  config.validate();
  const auto R = static_cast<std::size_t>(config.num_rrhs);
  const auto N = static_cast<std::size_t>(config.num_users);
  require(rrh_positions.size() == R, "rrh_positions has num_rrhs entries");
  require(user_positions.size() == N, "user_positions has num_users entries");
  require(antennas.size() == R, "antennas has num_rrhs entries");
  require(bbu_capacity.size() == static_cast<std::size_t>(config.num_bbus),
          "bbu_capacity has num_bbus entries");
  require(rate_req.size() == N, "rate_req has num_users entries");
  require(gain.rows() == static_cast<Eigen::Index>(R) && gain.cols() == static_cast<Eigen::Index>(N),
          "channel_gain is num_rrhs x num_users");
  for (int f : antennas) require(f >= 1, "F_r >= 1");
  for (double l : bbu_capacity) require(l > 0, "L_b^max > 0");
  for (double q : rate_req) require(q >= 0, "rate_req >= 0");
  for (std::size_t r = 0; r < R; ++r) {
    for (std::size_t n = 0; n < N; ++n) {
      const double h = gain(r, n);
      require(h > 0 && h <= 1, "channel gain in (0, 1]");
      const double expect = channel_gain(distance(rrh_positions[r], user_positions[n]));
      require(std::abs(h - expect) <= 1e-12, "channel gain matches 1/(1+d^4) of the stored positions");
    }
  }
}

bool Scenario::operator==(const Scenario& o) const {
  return config == o.config && rrh_positions == o.rrh_positions &&
         user_positions == o.user_positions && antennas == o.antennas &&
         bbu_capacity == o.bbu_capacity && rate_req == o.rate_req && gain == o.gain;
}

// ---------------------------------------------------------------------------
// JSON

namespace {

using nlohmann::json;

template <typename T>
T field(const json& j, const char* name) {
  if (!j.contains(name)) throw ParseError(name, "missing required field");
  try {
    return j.at(name).get<T>();
  } catch (const json::exception& e) {
    throw ParseError(name, e.what());
  }
}

json points_to_json(const std::vector<Point>& pts) {
  json a = json::array();
  for (const auto& p : pts) a.push_back({p.x, p.y});
  return a;
}

std::vector<Point> points_from_json(const json& j, const char* name) {
  std::vector<Point> out;
  for (const auto& e : field<std::vector<std::array<double, 2>>>(j, name)) out.push_back({e[0], e[1]});
  return out;
}

}  // namespace

json config_to_json(const ScenarioConfig& c) {
  return json{{"num_rrhs", c.num_rrhs},
              {"num_users", c.num_users},
              {"num_bbus", c.num_bbus},
              {"area_side", c.area_side},
              {"antennas_range", c.antennas_range},
              {"bbu_load_range", c.bbu_load_range},
              {"p_max", c.p_max},
              {"rate_req", c.rate_req},
              {"noise_power", c.noise_power},
              {"cost_per_antenna", c.cost_per_antenna},
              {"omega", c.effective_omega()},
              {"interference_threshold", c.interference_threshold},
              {"rng_seed", c.rng_seed}};
}

ScenarioConfig config_from_json(const json& j) {
  if (!j.is_object()) throw ParseError("<root>", "expected a JSON object");
  ScenarioConfig c;
  c.num_rrhs = field<int>(j, "num_rrhs");
  c.num_users = field<int>(j, "num_users");
  c.num_bbus = field<int>(j, "num_bbus");
  c.area_side = field<double>(j, "area_side");
  c.antennas_range = field<std::array<int, 2>>(j, "antennas_range");
  c.bbu_load_range = field<std::array<double, 2>>(j, "bbu_load_range");
  c.p_max = field<double>(j, "p_max");
  c.rate_req = field<double>(j, "rate_req");
  c.noise_power = field<double>(j, "noise_power");
  c.cost_per_antenna = field<double>(j, "cost_per_antenna");
  c.omega = field<int>(j, "omega");
  c.interference_threshold = field<double>(j, "interference_threshold");
  c.rng_seed = field<std::uint64_t>(j, "rng_seed");
  c.validate();
  return c;
}

json scenario_to_json(const Scenario& s) {
  json j = config_to_json(s.config);
  j["rrh_positions"] = points_to_json(s.rrh_positions);
  j["user_positions"] = points_to_json(s.user_positions);
  j["antennas"] = s.antennas;
  j["bbu_capacity"] = s.bbu_capacity;
  j["rate_req_per_user"] = s.rate_req;
  json h = json::array();
  for (Eigen::Index r = 0; r < s.gain.rows(); ++r) {
    std::vector<double> row(s.gain.cols());
    for (Eigen::Index n = 0; n < s.gain.cols(); ++n) row[n] = s.gain(r, n);
    h.push_back(row);
  }
  j["channel_gain"] = h;
  return j;
}

Scenario scenario_from_json(const json& j) {
  ScenarioConfig c = config_from_json(j);
  c.omega = c.effective_omega();
  if (!j.contains("user_positions")) return generate_scenario(c);

  Scenario s;
  s.config = c;
  s.rrh_positions = j.contains("rrh_positions") ? points_from_json(j, "rrh_positions")
                                                : rrh_layout(c.num_rrhs, c.area_side);
  s.user_positions = points_from_json(j, "user_positions");
  s.antennas = field<std::vector<int>>(j, "antennas");
  s.bbu_capacity = field<std::vector<double>>(j, "bbu_capacity");
  s.rate_req = j.contains("rate_req_per_user") ? field<std::vector<double>>(j, "rate_req_per_user")
                                               : std::vector<double>(s.user_positions.size(), c.rate_req);
  if (j.contains("channel_gain")) {
    const auto rows = field<std::vector<std::vector<double>>>(j, "channel_gain");
    if (rows.size() != s.rrh_positions.size())
      throw ParseError("channel_gain", "expected one row per RRH");
    s.gain.resize(static_cast<Eigen::Index>(rows.size()),
                  static_cast<Eigen::Index>(s.user_positions.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (rows[r].size() != s.user_positions.size())
        throw ParseError("channel_gain", "row " + std::to_string(r) + " must have one entry per user");
      for (std::size_t n = 0; n < rows[r].size(); ++n) s.gain(r, n) = rows[r][n];
    }
  } else {
    s.gain.resize(static_cast<Eigen::Index>(s.rrh_positions.size()),
                  static_cast<Eigen::Index>(s.user_positions.size()));
    for (std::size_t r = 0; r < s.rrh_positions.size(); ++r)
      for (std::size_t n = 0; n < s.user_positions.size(); ++n)
        s.gain(r, n) = channel_gain(distance(s.rrh_positions[r], s.user_positions[n]));
  }
  s.validate();
  return s;
}

void save_scenario(const Scenario& s, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << scenario_to_json(s).dump(2) << '\n';
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError("<root>", std::string(e.what()) + " (byte " + std::to_string(e.byte) + ")");
  }
  return scenario_from_json(j);
}

// ---------------------------------------------------------------------------
// Feasibility report

bool FeasibilityReport::feasible() const {
  for (const auto& c : checks)
    if (!c.passed) return false;
  return true;
}

const ConstraintCheck& FeasibilityReport::check(const std::string& name) const {
  for (const auto& c : checks)
    if (c.name == name) return c;
  throw std::out_of_range("no constraint " + name);
}

std::string FeasibilityReport::summary() const {
  std::ostringstream os;
  for (const auto& c : checks) {
    os << c.name << (c.passed ? " ok" : " FAIL");
    if (!c.passed) os << " (slack " << c.worst_slack << ")";
    for (const auto& v : c.violations) os << "\n  " << v;
    os << '\n';
  }
  return os.str();
}

FeasibilityReport validate_solution(const Scenario& s, const Allocation& a, double tol) {
  a.check_shape(s);
  const int R = s.num_rrhs(), N = s.num_users(), B = s.num_bbus();
  FeasibilityReport rep;
  auto record = [](ConstraintCheck& c, double violation, const std::string& what) {
    if (violation <= 0) return;
    c.passed = false;
    c.worst_slack = std::max(c.worst_slack, violation);
    c.violations.push_back(what + " by " + std::to_string(violation));
  };

  auto is_binary = [](double v) { return v == 0.0 || v == 1.0; };
  bool binary = true;
  for (Eigen::Index i = 0; i < a.alpha.size(); ++i) binary &= is_binary(a.alpha.data()[i]);
  for (Eigen::Index i = 0; i < a.beta.size(); ++i) binary &= is_binary(a.beta.data()[i]);
  for (Eigen::Index i = 0; i < a.y.size(); ++i) binary &= is_binary(a.y[i]);
  if (!binary) throw InvariantError("validate_solution expects binary alpha, beta and y");
  if ((a.power.array() < 0).any()) throw InvariantError("validate_solution expects nonnegative powers");

  ConstraintCheck c1, c2, c3, c4, c5, c6, c7;
  c1.name = "C1", c2.name = "C2", c3.name = "C3", c4.name = "C4";
  c5.name = "C5", c6.name = "C6", c7.name = "C7";
  for (int r = 0; r < R; ++r) {
    const double excess = a.power.row(r).sum() - s.config.p_max;
    record(c1, excess > tol * s.config.p_max ? excess : 0, "RRH " + std::to_string(r) + " power");
  }

  Matrix rate = Matrix::Zero(R, N);
  bool domain_ok = true;
  for (int r = 0; r < R; ++r) {
    for (int n = 0; n < N; ++n) {
      if (a.alpha(r, n) == 0) continue;
      try {
        rate(r, n) = exact_rate(a, s, r, n);
      } catch (const ModelDomainError& e) {
        domain_ok = false;
        record(c2, 1.0, std::string("user ") + std::to_string(n) + ": " + e.what());
      }
    }
  }
  if (domain_ok) {
    for (int n = 0; n < N; ++n) {
      double got = 0;
      for (int r = 0; r < R; ++r) got += a.alpha(r, n) * rate(r, n);
      const double need = s.rate_req[n];
      record(c2, need - got > tol * std::max(1.0, need) ? need - got : 0,
             "user " + std::to_string(n) + " rate short");
    }
  }
  for (int n = 0; n < N; ++n)
    record(c3, a.alpha.col(n).sum() - 1.0, "user " + std::to_string(n) + " has several servers");
  for (int r = 0; r < R; ++r)
    record(c4, a.beta.row(r).sum() - 1.0, "RRH " + std::to_string(r) + " has several BBUs");
  for (int b = 0; b < B; ++b) {
    double load = 0;
    for (int r = 0; r < R; ++r)
      for (int n = 0; n < N; ++n) load += a.beta(r, b) * a.alpha(r, n) * rate(r, n);
    const double excess = load - s.bbu_capacity[b];
    record(c5, excess > tol * s.bbu_capacity[b] ? excess : 0, "BBU " + std::to_string(b) + " load");
  }
  for (int r = 0; r < R; ++r) {
    const double attached = a.beta.row(r).sum();
    record(c6, attached - a.y(r), "RRH " + std::to_string(r) + " fronthaul without power-on");
    if (a.y(r) == 1.0 && attached == 0.0)
      record(c6, 1.0, "active RRH " + std::to_string(r) + " not attached to a BBU");
  }
  const double omega = s.config.effective_omega();
  for (int r = 0; r < R; ++r)
    record(c7, a.alpha.row(r).sum() - a.y(r) * omega, "RRH " + std::to_string(r) + " serves while off");

  rep.checks = {c1, c2, c3, c4, c5, c6, c7};
  return rep;
}

}  // namespace cran
