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

#include <omp.h>

#include <cmath>
#include <random>

#include "cran/kernels.hpp"
#include "cran/rate_model.hpp"
#include "doctest.h"

using namespace cran;
using namespace cran::gp;

namespace {

std::vector<LogFunction> random_functions(std::mt19937_64& rng, int nvars, int count) {
  std::uniform_real_distribution<double> coef(0.1, 5.0), ex(-2.0, 2.0);
  std::uniform_int_distribution<int> nterms(1, 6), pick(0, nvars - 1);
  std::vector<LogFunction> out;
  for (int k = 0; k < count; ++k) {
    Posynomial p;
    const int t = nterms(rng);
    for (int i = 0; i < t; ++i) {
      Monomial m(coef(rng));
      for (int j = 0; j < 3; ++j) m *= Monomial::variable(pick(rng), ex(rng));
      p += m;
    }
    out.push_back(log_function(p));
  }
  return out;
}

}  // namespace

TEST_CASE("derivatives match finite differences") {
  std::mt19937_64 rng(41);
  const int n = 8;
  const auto fs = random_functions(rng, n, 40);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  for (const auto& f : fs) {
    kernels::LocalDerivatives d;
    kernels::evaluate(f, v, d);
    CHECK(d.value == doctest::Approx(f.value(v)).epsilon(1e-14));
    const auto m = f.support.size();
    const double h = 1e-6;
    for (std::size_t a = 0; a < m; ++a) {
      auto vp = v, vm = v;
      vp[f.support[a]] += h;
      vm[f.support[a]] -= h;
      const double fd = (f.value(vp) - f.value(vm)) / (2 * h);
      CHECK(d.grad[a] == doctest::Approx(fd).epsilon(1e-6).scale(1.0));
      kernels::LocalDerivatives dp, dm;
      kernels::evaluate(f, vp, dp);
      kernels::evaluate(f, vm, dm);
      for (std::size_t b = 0; b < m; ++b) {
        const double fd2 = (dp.grad[b] - dm.grad[b]) / (2 * h);
        CHECK(d.hess[a * m + b] == doctest::Approx(fd2).epsilon(1e-5).scale(1.0));
      }
    }
  }
}

TEST_CASE("hessian of log-sum-exp is positive semidefinite") {
  std::mt19937_64 rng(43);
  const auto fs = random_functions(rng, 6, 30);
  std::vector<double> v(6, 0.2);
  for (const auto& f : fs) {
    kernels::LocalDerivatives d;
    kernels::evaluate(f, v, d);
    const auto m = static_cast<Eigen::Index>(f.support.size());
    const Eigen::Map<const Eigen::MatrixXd> H(d.hess.data(), m, m);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
    CHECK(es.eigenvalues().minCoeff() >= -1e-12);
  }
}

TEST_CASE("parallel batch evaluation is bit-identical to serial") {
  std::mt19937_64 rng(47);
  const int n = 30;
  const auto fs = random_functions(rng, n, 500);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  std::vector<kernels::LocalDerivatives> a, b;
  kernels::evaluate_batch_serial(fs, v, a);
  for (int threads : {1, 2, 4}) {
    omp_set_num_threads(threads);
    kernels::evaluate_batch_omp(fs, v, b);
    REQUIRE(a.size() == b.size());
    bool same = true;
    for (std::size_t i = 0; i < a.size(); ++i)
      same &= a[i].value == b[i].value && a[i].grad == b[i].grad && a[i].hess == b[i].hess;
    CHECK(same);
    std::vector<double> va, vb;
    kernels::values_serial(fs, v, va);
    kernels::values_omp(fs, v, vb);
    CHECK(va == vb);
  }
}

TEST_CASE("parallel interference matrix is bit-identical to serial") {
  ScenarioConfig c;
  c.num_rrhs = 9;
  c.num_users = 70;
  c.num_bbus = 3;
  const auto s = generate_scenario(c);
  std::mt19937_64 rng(53);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix p(9, 70);
  for (int i = 0; i < p.size(); ++i) p.data()[i] = u(rng);
  const Matrix serial = interference_matrix(p, s);
  for (int threads : {1, 3}) {
    omp_set_num_threads(threads);
    CHECK(kernels::interference_matrix_omp(p, s) == serial);
  }
  CHECK(kernels::max_threads() >= 1);
}
