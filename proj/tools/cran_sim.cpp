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

#include <chrono>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "cran/experiments.hpp"

using namespace cran;
using json = nlohmann::json;

namespace {

enum Exit { kOk = 0, kUsage = 1, kInfeasible = 2, kInternal = 3 };

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
};

void add_common(CLI::App* cmd, Common& c, bool need_out = true) {
  cmd->add_option("--config", c.config, "scenario or scenario-config JSON file");
  cmd->add_option("--seed", c.seed, "RNG seed for generated scenarios");
  auto* o = cmd->add_option("--out", c.out, "output directory");
  if (need_out) o->required();
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw UsageError(path + ": " + e.what());
  }
}

// Fields missing from a bare config take their default values.
json with_defaults(const json& partial, const ScenarioConfig& defaults) {
  json j = config_to_json(defaults);
  j.update(partial);
  if (!partial.contains("omega")) j["omega"] = 0;
  return j;
}

Scenario load_input(const Common& c, const ScenarioConfig& fallback = {}) {
  try {
    json j = c.config.empty() ? json::object() : read_json_file(c.config);
    if (!j.contains("user_positions")) j = with_defaults(j, fallback);
    if (c.seed && !j.contains("user_positions")) j["rng_seed"] = *c.seed;
    return scenario_from_json(j);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
}

std::filesystem::path out_dir(const Common& c) {
  std::filesystem::path d(c.out);
  std::filesystem::create_directories(d);
  return d;
}

void write_text(const std::filesystem::path& p, const std::string& body) {
  std::ofstream out(p);
  if (!out) throw Error("cannot write " + p.string());
  out << body;
}

json solution_summary(const Scenario& s, const Solution& sol) {
  return {{"utility", sol.utility},
          {"total_tx_power", radiated_power(sol.allocation)},
          {"throughput", total_throughput(sol.allocation, s)},
          {"EE", energy_efficiency(sol.allocation, s)},
          {"active_rrh_count", sol.allocation.active_rrh_count()},
          {"feasible", sol.report.feasible()}};
}

double elapsed_ms(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<double> parse_values(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError("bad value '" + item + "' in --values");
    }
  }
  if (out.empty()) throw UsageError("--values is empty");
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"C-RAN joint RRH, BBU and power allocation simulator"};
  app.require_subcommand(1);
  app.set_version_flag("--version", version_string());

  Common gen, sol, base, orc, swp;
  std::string rounding = "consolidate";
  double margin = SolverConfig{}.margin;
  int max_outer = SolverConfig{}.max_outer_iter;
  int grid_levels = 6;
  std::string sweep_param = "users", values_text;
  int seeds = 5;
  bool deterministic = false;
  std::string compare_in, compare_out;

  auto* g = app.add_subcommand("generate", "write a random scenario");
  add_common(g, gen);
  auto* s = app.add_subcommand("solve", "run the two-step SCA solver");
  add_common(s, sol);
  s->add_option("--rounding", rounding, "argmax or consolidate")->check(CLI::IsMember({"argmax", "consolidate"}));
  s->add_option("--margin", margin, "rate inflation used by repair")->check(CLI::NonNegativeNumber);
  s->add_option("--max-outer", max_outer, "outer iteration limit")->check(CLI::PositiveNumber);
  auto* b = app.add_subcommand("baseline", "run the max-SINR baseline");
  add_common(b, base);
  auto* o = app.add_subcommand("oracle", "exhaustive search on a power grid");
  add_common(o, orc);
  o->add_option("--oracle-grid", grid_levels, "number of nonzero power levels")->check(CLI::PositiveNumber);
  auto* w = app.add_subcommand("sweep", "user-count or rate sweep of both algorithms");
  add_common(w, swp);
  w->add_option("--sweep-param", sweep_param, "users or rate")->check(CLI::IsMember({"users", "rate"}));
  w->add_option("--values", values_text, "comma-separated sweep values")->required();
  w->add_option("--seeds", seeds, "seeds per point")->check(CLI::PositiveNumber);
  w->add_flag("--deterministic", deterministic, "write zero solve times");
  auto* c = app.add_subcommand("compare", "pair proposed and baseline rows of a sweep");
  c->add_option("--in", compare_in, "results.csv of a sweep")->required()->check(CLI::ExistingFile);
  c->add_option("--out", compare_out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  const auto t0 = std::chrono::steady_clock::now();
  json args = json::object();
  for (int i = 1; i < argc; ++i) args["argv"].push_back(argv[i]);
  try {
    SolverConfig cfg;
    cfg.rounding = rounding_policy_from_string(rounding);
    cfg.margin = margin;
    cfg.max_outer_iter = max_outer;

    if (*g) {
      const auto sc = load_input(gen);
      const auto d = out_dir(gen);
      save_scenario(sc, d / "scenario.json");
      write_json(make_manifest("generate", args, sc.config, elapsed_ms(t0)), d / "manifest.json");
      std::cout << "wrote " << (d / "scenario.json").string() << '\n';
    } else if (*s || *b) {
      const Common& in = *s ? sol : base;
      const auto sc = load_input(in);
      const auto d = out_dir(in);
      const auto result = *s ? outer_solve(sc, cfg) : baseline_solve(sc, cfg);
      write_text(d / "solution.csv", solution_csv(sc, result));
      if (*s) write_text(d / "trace.csv", result.trace.to_csv());
      const json summary = solution_summary(sc, result);
      write_json(summary, d / "summary.json");
      write_json(make_manifest(*s ? "solve" : "baseline", args, sc.config, elapsed_ms(t0)), d / "manifest.json");
      std::cout << summary.dump() << '\n';
    } else if (*o) {
      const auto sc = load_input(orc);
      const auto grid = PowerGrid::log_spaced(grid_levels, 1e-9, sc.config.p_max);
      const auto result = brute_force_oracle(sc, grid);
      const auto d = out_dir(orc);
      write_text(d / "solution.csv", solution_csv(sc, result));
      const json summary = solution_summary(sc, result);
      write_json(summary, d / "summary.json");
      write_json(make_manifest("oracle", args, sc.config, elapsed_ms(t0)), d / "manifest.json");
      std::cout << summary.dump() << '\n';
    } else if (*w) {
      SweepSpec spec;
      spec.param = sweep_param_from_string(sweep_param);
      spec.values = parse_values(values_text);
      spec.seeds = seeds;
      spec.solver = cfg;
      spec.deterministic = deterministic;
      ScenarioConfig fallback;
      fallback.antennas_range = {140, 140};
      try {
        spec.base = config_from_json(with_defaults(swp.config.empty() ? json::object() : read_json_file(swp.config), fallback));
        if (swp.seed) spec.base.rng_seed = *swp.seed;
        spec.validate();
      } catch (const Error& e) {
        throw UsageError(e.what());
      }
      const auto d = out_dir(swp);
      const auto result = run_sweep(spec);
      write_sweep(result, d);
      write_json(make_manifest("sweep", args, spec.base, elapsed_ms(t0)), d / "manifest.json");
      for (const auto& v : result.violations) std::cout << "monotonicity: " << v << '\n';
      std::cout << result.rows.size() << " rows written to " << (d / "results.csv").string() << '\n';
    } else if (*c) {
      std::ifstream in(compare_in);
      std::stringstream buf;
      buf << in.rdbuf();
      std::vector<ResultRow> rows;
      try {
        rows = parse_results_csv(buf.str());
      } catch (const std::exception& e) {
        throw UsageError(e.what());
      }
      const auto param = buf.str().rfind("rate,", 0) == 0 ? SweepParam::rate : SweepParam::users;
      const std::filesystem::path d(compare_out);
      std::filesystem::create_directories(d);
      const auto cmp = compare_rows(rows);
      write_text(d / "compare.csv", compare_csv(cmp, param));
      write_json(make_manifest("compare", args, ScenarioConfig{}, elapsed_ms(t0)), d / "manifest.json");
      std::cout << cmp.size() << " comparison rows\n";
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const InstanceTooLargeError& e) {
    std::cerr << "error: instance too large: " << e.what() << '\n';
    return kUsage;
  } catch (const InfeasibleError& e) {
    std::cerr << "infeasible: " << e.what() << '\n';
    return kInfeasible;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kInternal;
  }
  return kOk;
}
