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

#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace cran {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file: carries the offending field name.
class ParseError : public Error {
 public:
  ParseError(const std::string& field, const std::string& what)
      : Error("parse error in field '" + field + "': " + what), field_(field) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

/// A well-formed value that breaks a model invariant.
class InvariantError : public Error {
 public:
  using Error::Error;
};

/// Evaluation outside the domain of the rate model (e.g. N_r > F_r).
class ModelDomainError : public Error {
 public:
  using Error::Error;
};

/// Raised when a solve or a repair cannot produce a feasible allocation.
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

}  // namespace cran
