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

#ifndef HMIMO_CONVEX_TYPES_HPP
#define HMIMO_CONVEX_TYPES_HPP

#include <vector>

namespace hmimo {

/// What a solver optimizes: the full rate/power ratio, or rate alone under the
/// same feasible set.
enum class OptimizeMode { EnergyEfficiency, Capacity };

enum class Termination { Converged, MaxIters, Infeasible, NumericalTrouble };

/// Knobs shared by every iterative solver in the stack.
struct SolverOptions {
  int max_iters = 200;        // outer iteration cap of the calling algorithm
  double obj_tol = 1e-8;      // fractional-programming certificate tolerance
  double feas_tol = 1e-8;     // relative feasibility tolerance
  double barrier_mu = 20.0;   // growth factor of the barrier parameter
  double inner_tol = 1e-11;   // Newton decrement^2 / 2 threshold
  double barrier_gap = 1e-10; // final duality-gap bound, natural-log units
  double rel_obj_change = 1e-6;  // outer-loop relative objective stop
  double time_cap_s = 0.0;    // cooperative wall-clock cap; 0 disables
};

/// Common result envelope.  `objective_trace` holds the accepted objective
/// value after each outer iteration; `certificate` is |F(eta)| at termination
/// for fractional solves and 0 elsewhere.
struct SolveReport {
  std::vector<double> objective_trace;
  int iterations = 0;
  Termination termination = Termination::Converged;
  double kkt_residual = 0.0;
  std::vector<double> constraint_residuals;
  double certificate = 0.0;
};

}  // namespace hmimo

#endif  // HMIMO_CONVEX_TYPES_HPP
