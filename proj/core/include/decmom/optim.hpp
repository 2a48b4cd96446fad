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

#ifndef DECMOM_OPTIM_HPP
#define DECMOM_OPTIM_HPP

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "decmom/data.hpp"
#include "decmom/metrics.hpp"
#include "decmom/objectives.hpp"
#include "decmom/rng.hpp"
#include "decmom/topology.hpp"

namespace decmom {

enum class Algorithm {
  /// Plain local SGD; with beta > 0 the local steps use heavy-ball momentum
  /// that restarts every epoch. Only x is gossiped.
  kVanillaSgd,
  /// K unified-momentum steps, then gossip of x and v.
  kDsum,
  /// D-SUM on the blended direction lambda*g + (1-lambda)*y plus a gossiped tracker y.
  kGtDsum,
};

std::string_view to_string(Algorithm algo);
/// Accepts "vanilla", "dsum", "gtdsum". Throws InvalidArgument otherwise.
Algorithm parse_algorithm(std::string_view name);

/// Hyperparameters of the unified momentum update.
struct SumHyper {
  double alpha = 2.0;
  double beta = 0.9;
  double eta = 0.01;
  double lambda = 0.8;
  std::size_t k_local = 10;
  Algorithm algo = Algorithm::kDsum;

  /// alpha >= 0, 0 <= beta < 1, eta > 0, 0 <= lambda <= 1, k_local >= 1.
  void validate() const;
};

/// Parameters beyond this magnitude count as divergence.
inline constexpr double kDivergenceMagnitude = 1e12;

struct StepContext {
  std::size_t epoch = 0;
  std::size_t step = 0;
  std::size_t worker = 0;
};

/// Throws DivergenceError if any entry is non-finite or exceeds kDivergenceMagnitude.
void guard_finite(std::span<const double> values, const StepContext& ctx, const char* what);

/// One unified-momentum step, in place:
///   u  = x - eta*g
///   v' = x - alpha*eta*g
///   x' = u + beta*(v' - v)
void sum_local_step(std::span<double> x, std::span<double> v, std::span<const double> g, const SumHyper& hyper,
                    const StepContext& ctx = {});

/// out_i = sum_j w_ij * in_j, accumulated in ascending j.
std::vector<ParamVector> gossip_average(std::span<const ParamVector> vectors, const MixingMatrix& w);

struct WorkerState {
  ParamVector x;
  /// Unified-momentum auxiliary sequence.
  ParamVector v;
  /// Gradient tracker (GT-DSUM only).
  ParamVector y;
  /// Pseudo-gradient of the previous epoch; zero before the first epoch.
  ParamVector d_prev;
  /// x at the start of the current epoch.
  ParamVector x_epoch_start;
  RngStream rng;
};

/// Read-only view of what the workers train on.
struct Problem {
  const GradientOracle* oracle = nullptr;
  const Dataset* data = nullptr;
  std::span<const Shard> shards;
  std::size_t batch_size = 32;
  /// Use the whole shard as the batch at every step (no sampling).
  bool full_batch = false;
};

/// Emitted before each gradient evaluation. `bootstrap` marks the GT tracker's
/// initial batch (drawn before epoch 0, step 0).
struct BatchEvent {
  std::size_t worker;
  std::size_t epoch;
  std::size_t step;
  bool bootstrap;
  std::span<const std::size_t> indices;
};

/// Emitted after each local step with the iterates on both sides of it.
struct StepEvent {
  std::size_t worker;
  std::size_t epoch;
  std::size_t step;
  std::span<const double> x_before;
  std::span<const double> v_before;
  std::span<const double> grad;
  /// Direction fed to the update (equals `grad` except under GT-DSUM).
  std::span<const double> applied;
  std::span<const double> x_after;
  std::span<const double> v_after;
  double loss;
};

/// Optional observers. With more than one thread they are called concurrently
/// from different workers and must be thread-safe.
struct EpochHooks {
  std::function<void(const BatchEvent&)> on_batch;
  std::function<void(const StepEvent&)> on_step;
};

struct Cohort {
  std::vector<WorkerState> workers;
  TopologySchedule schedule;
  SumHyper hyper;
  std::uint64_t seed = 0;
  /// Worker-parallelism; has no effect on results.
  std::size_t threads = 1;
  /// Set once y has been bootstrapped (GT-DSUM).
  bool tracker_ready = false;

  std::size_t size() const noexcept { return workers.size(); }
};

/// Every worker starts from x = v = x0, d_prev = 0; y = 0 until bootstrapped.
Cohort make_cohort(const SumHyper& hyper, TopologySchedule schedule, const ParamVector& x0, std::uint64_t seed,
                   std::size_t threads = 1);

/// y_i = grad F_i(x_i, xi) on a dedicated bootstrap batch per worker.
void bootstrap_tracker(Cohort& cohort, const Problem& problem, const EpochHooks& hooks = {});

/// One epoch of D-SUM (or of local SGD when hyper.algo is kVanillaSgd).
void dsum_epoch(Cohort& cohort, std::size_t epoch, const Problem& problem, const EpochHooks& hooks = {});

/// One epoch of GT-DSUM. Bootstraps the tracker first if needed.
void gtdsum_epoch(Cohort& cohort, std::size_t epoch, const Problem& problem, const EpochHooks& hooks = {});

/// Dispatches on hyper.algo.
void run_epoch(Cohort& cohort, std::size_t epoch, const Problem& problem, const EpochHooks& hooks = {});

using EpochEvaluator = std::function<MetricsRecord(const Cohort&, std::size_t completed_epochs)>;
using RecordSink = std::function<void(const MetricsRecord&)>;

struct RunOutcome {
  std::vector<MetricsRecord> records;
  bool diverged = false;
  std::string divergence_message;
};

/// Runs `epochs` epochs, evaluating and emitting one record after each. A
/// DivergenceError stops the run; the records gathered so far are returned.
RunOutcome run(Cohort& cohort, std::size_t epochs, const Problem& problem, const EpochEvaluator& evaluate,
               const RecordSink& sink = {}, const EpochHooks& hooks = {});

}  // namespace decmom

#endif  // DECMOM_OPTIM_HPP
