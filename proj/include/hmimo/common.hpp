// SPDX-License-Identifier: Apache-2.0
//
// hmimo: energy-efficient MIMO links assisted by nearly-passive metasurfaces
// Copyright (C) 2026 hmimo contributors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef HMIMO_COMMON_HPP
#define HMIMO_COMMON_HPP

#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace hmimo {

using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::Vector3d;
using Eigen::VectorXcd;
using Eigen::VectorXd;
using cxd = std::complex<double>;

inline constexpr double kSpeedOfLight = 299792458.0;  // [m/s]
inline constexpr double kPi = 3.141592653589793238462643383279502884;

// ---------------------------------------------------------------------------
// Error taxonomy.  All validation failures throw one of these so callers can
// distinguish "you passed garbage" from "the model broke down numerically".
// ---------------------------------------------------------------------------

/// Mismatched or otherwise unusable operand shapes.
class dimension_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Input is numerically rank deficient / too ill-conditioned to invert.
class conditioning_error : public std::runtime_error {
 public:
  conditioning_error(const std::string& what, double sigma_min, double sigma_max)
      : std::runtime_error(what), sigma_min_(sigma_min), sigma_max_(sigma_max) {}
  double sigma_min() const noexcept { return sigma_min_; }
  double sigma_max() const noexcept { return sigma_max_; }

 private:
  double sigma_min_;
  double sigma_max_;
};

/// A matrix that must be positive (semi)definite is not.
class not_psd_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Physically meaningless model state (non-positive power, bad noise, ...).
class model_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An iterative solver failed hard (infeasible set, rank recovery broke, ...).
class solver_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Input validation helpers.
// ---------------------------------------------------------------------------

namespace detail {

inline void check_positive(double value, const char* name) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw model_error(std::string(name) + " must be positive and finite, got " +
                      std::to_string(value));
  }
}

inline void check_nonnegative(double value, const char* name) {
  if (!(value >= 0.0) || !std::isfinite(value)) {
    throw model_error(std::string(name) + " must be nonnegative and finite, got " +
                      std::to_string(value));
  }
}

template <typename Derived>
void check_finite(const Eigen::MatrixBase<Derived>& m, const char* name) {
  if (!m.allFinite()) {
    throw dimension_error(std::string(name) + " contains non-finite entries");
  }
}

inline void check_nonempty(const MatrixXcd& m, const char* name) {
  if (m.rows() == 0 || m.cols() == 0) {
    throw dimension_error(std::string(name) + " must be non-empty");
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Unit conversions.
// ---------------------------------------------------------------------------

inline double dbm_to_watts(double dbm) { return 1e-3 * std::pow(10.0, dbm / 10.0); }

inline double watts_to_dbm(double watts) {
  detail::check_positive(watts, "watts");
  return 10.0 * std::log10(watts / 1e-3);
}

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

inline double linear_to_db(double lin) {
  detail::check_positive(lin, "linear value");
  return 10.0 * std::log10(lin);
}

}  // namespace hmimo

#endif  // HMIMO_COMMON_HPP
