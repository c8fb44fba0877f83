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

#include <benchmark/benchmark.h>

#include "cran/kernels.hpp"
#include "cran/rate_model.hpp"
#include "cran/sca.hpp"

using namespace cran;

namespace {

Scenario scenario_for(int users) {
  ScenarioConfig c;
  c.num_users = users;
  c.antennas_range = {140, 140};
  return generate_scenario(c);
}

struct Step1Fixture {
  gp::ConvexProgram program;
  std::vector<double> point;

  explicit Step1Fixture(int users) {
    const auto s = scenario_for(users);
    Matrix P = Matrix::Zero(s.num_rrhs(), users);
    for (int n = 0; n < users; ++n) {
      Eigen::Index r;
      s.gain.col(n).maxCoeff(&r);
      P(r, n) = 1.0;
    }
    const auto it = sca::Step1Iterate::uniform(s);
    program = gp::log_transform(sca::build_step1_gp(s, sca::Step1Inputs::from_power(s, P), it));
    for (double x : sca::step1_values(s, it)) point.push_back(std::log(x));
  }
};

template <bool Omp>
void BM_StepOneDerivatives(benchmark::State& state) {
  const Step1Fixture fx(static_cast<int>(state.range(0)));
  std::vector<kernels::LocalDerivatives> out;
  for (auto _ : state) {
    if constexpr (Omp)
      kernels::evaluate_batch_omp(fx.program.inequalities, fx.point, out);
    else
      kernels::evaluate_batch_serial(fx.program.inequalities, fx.point, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.counters["functions"] = static_cast<double>(fx.program.inequalities.size());
  state.counters["threads"] = Omp ? kernels::max_threads() : 1;
}

template <bool Omp>
void BM_StepOneValues(benchmark::State& state) {
  const Step1Fixture fx(static_cast<int>(state.range(0)));
  std::vector<double> out;
  for (auto _ : state) {
    if constexpr (Omp)
      kernels::values_omp(fx.program.inequalities, fx.point, out);
    else
      kernels::values_serial(fx.program.inequalities, fx.point, out);
    benchmark::DoNotOptimize(out.data());
  }
}

template <bool Omp>
void BM_Interference(benchmark::State& state) {
  const auto s = scenario_for(static_cast<int>(state.range(0)));
  const Matrix P = Matrix::Constant(s.num_rrhs(), s.num_users(), s.config.p_max / s.num_users());
  for (auto _ : state) {
    Matrix I = Omp ? kernels::interference_matrix_omp(P, s) : interference_matrix(P, s);
    benchmark::DoNotOptimize(I.data());
  }
}

}  // namespace

BENCHMARK(BM_StepOneDerivatives<false>)->Name("step1_derivatives/serial")->Arg(20)->Arg(50)->Arg(70);
BENCHMARK(BM_StepOneDerivatives<true>)->Name("step1_derivatives/omp")->Arg(20)->Arg(50)->Arg(70);
BENCHMARK(BM_StepOneValues<false>)->Name("step1_values/serial")->Arg(20)->Arg(70);
BENCHMARK(BM_StepOneValues<true>)->Name("step1_values/omp")->Arg(20)->Arg(70);
BENCHMARK(BM_Interference<false>)->Name("interference/serial")->Arg(70)->Arg(500);
BENCHMARK(BM_Interference<true>)->Name("interference/omp")->Arg(70)->Arg(500);

BENCHMARK_MAIN();
