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

#ifndef DECMOM_DIAGNOSTICS_HPP
#define DECMOM_DIAGNOSTICS_HPP

#include <cstddef>
#include <cstdint>
#include <span>

#include "decmom/data.hpp"
#include "decmom/metrics.hpp"
#include "decmom/objectives.hpp"
#include "decmom/optim.hpp"

namespace decmom {

/// Worker average, summed in worker order.
ParamVector average(std::span<const ParamVector> vectors);
ParamVector average_x(const Cohort& cohort);

/// (1/n) sum_i ||x_i - x_bar||^2.
double consensus_distance(std::span<const ParamVector> xs);
double consensus_distance(const Cohort& cohort);

/// grad f(x) = (1/n) sum_i grad f_i(x), each f_i the mean loss over shard i.
ParamVector global_gradient(const Problem& problem, std::span<const double> x);

/// Point estimate of the tracker error: max_i ||y_i - (1/n) sum_j grad f_j(x_i)||.
/// Costs n^2 full-shard gradients. Throws StateError unless the cohort runs GT-DSUM.
double tracker_error(const Cohort& cohort, const Problem& problem);

/// (1/n) sum_i ||grad f_i(x) - grad f(x)||^2 at `x`.
double heterogeneity(const Problem& problem, std::span<const double> x);

struct TestEvaluation {
  double loss = 0.0;
  double accuracy = 0.0;
};

/// Mean loss and arg-max accuracy (ties to the lowest class) on `test`.
/// Throws InvalidArgument on an empty set, StateError for non-classifiers.
TestEvaluation evaluate_test(const GradientOracle& oracle, std::span<const double> x, const Dataset& test);

/// Mean over `draws` minibatch gradients at x of ||g - grad f_i(x)||^2, averaged over workers.
double stochastic_variance(const Problem& problem, std::span<const double> x, std::uint64_t seed,
                           std::size_t draws = 32);

struct DiagnosticsOptions {
  /// Tracker error is computed on epochs divisible by this.
  std::size_t tracker_every = 1;
  const Dataset* test = nullptr;
};

/// Full MetricsRecord for the cohort after `completed_epochs` epochs.
MetricsRecord collect_metrics(const Cohort& cohort, const Problem& problem, std::size_t completed_epochs,
                              const DiagnosticsOptions& options);

}  // namespace decmom

#endif  // DECMOM_DIAGNOSTICS_HPP
