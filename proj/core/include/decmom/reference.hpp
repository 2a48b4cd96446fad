// Copyright 2026 The decmom Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef DECMOM_REFERENCE_HPP
#define DECMOM_REFERENCE_HPP

// Small, literal implementations of the classical methods. They exist to be
// compared against the optimizer in tests and are never on the hot path.

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "decmom/objectives.hpp"
#include "decmom/topology.hpp"

namespace decmom::reference {

struct ReferenceState {
  ParamVector x;
  /// Momentum buffer, zero initially.
  ParamVector u;
};

ReferenceState make_state(const ParamVector& x0);

/// x <- x - eta*g
void sgd_step(ReferenceState& s, std::span<const double> g, double eta);

/// Heavy ball, two-variable form: u <- beta*u + g; x <- x - eta*u
void hb_step(ReferenceState& s, std::span<const double> g, double beta, double eta);

/// Nesterov: u <- beta*u + g; x <- x - eta*(beta*u + g)
void nesterov_step(ReferenceState& s, std::span<const double> g, double beta, double eta);

/// Heavy ball, one-line form: x - eta*g + beta*(x - x_prev)
ParamVector hb_one_line(std::span<const double> x, std::span<const double> x_prev, std::span<const double> g,
                        double beta, double eta);

/// Nesterov, one-line form: x - eta*g + beta*(x - eta*g - x_prev + eta*g_prev)
ParamVector nesterov_one_line(std::span<const double> x, std::span<const double> x_prev, std::span<const double> g,
                              std::span<const double> g_prev, double beta, double eta);

/// out_i = sum_j w(i, j) * in_j, written as a plain triple loop.
std::vector<ParamVector> mix(const SquareMatrix& w, const std::vector<ParamVector>& in);

/// Classical gradient tracking state of one worker.
struct GtWorker {
  ParamVector x;
  ParamVector y;
  ParamVector g_prev;
};

/// Stochastic gradient of worker `i` at `x`; the caller decides which batch is used.
using GradientFn = std::function<ParamVector(std::size_t worker, const ParamVector& x)>;

/// y_i = g_prev_i = grad_i(x0).
std::vector<GtWorker> gt_init(const ParamVector& x0, std::size_t workers, const GradientFn& grad);

/// x_i <- sum_j w_ij (x_j - eta*y_j);  y_i <- sum_j w_ij (y_j + g_j(x_j new) - g_j old)
void vanilla_gt_step(std::vector<GtWorker>& workers, const SquareMatrix& w, const GradientFn& grad, double eta);

/// One point of a single-epoch trajectory: iterates before step tau and the
/// direction applied at step tau. The final point only needs x and v.
struct TracePoint {
  ParamVector x;
  ParamVector v;
  ParamVector g;
};

/// Largest violation over the trajectory of
///   z' = z - eta/(1-beta) g          with z = x + beta/(1-beta) (x - v)
///   c' = beta c + (alpha - alpha beta - 1) eta g   with c = x - v
/// Throws InvalidArgument for beta >= 1.
double momentum_identity_violation(std::span<const TracePoint> trajectory, double alpha, double beta, double eta);

}  // namespace decmom::reference

#endif  // DECMOM_REFERENCE_HPP
