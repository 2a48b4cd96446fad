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


#ifndef DECMOM_TESTS_SUPPORT_HPP
#define DECMOM_TESTS_SUPPORT_HPP

// Helpers shared by the unit and acceptance tests. The eigen-solver and the
// statistics are written out independently of the library; the equivalence
// runners drive the optimizer against the reference methods.

#include <cstddef>
#include <cstdint>
#include <map>
#include <mutex>
#include <tuple>
#include <vector>

#include "decmom/data.hpp"
#include "decmom/objectives.hpp"
#include "decmom/optim.hpp"
#include "decmom/topology.hpp"

namespace decmom::testing {

/// Eigenvalues by cyclic Jacobi rotations, sorted descending.
std::vector<double> jacobi_eigenvalues(const SquareMatrix& a, double tol = 1e-15);

/// 1 - max(|l2|, |ln|)^2 from the Jacobi eigenvalues.
double jacobi_spectral_gap(const SquareMatrix& a);

/// Random d x n matrix stored as n column vectors, entries ~ N(0, 1).
std::vector<ParamVector> random_columns(std::size_t n, std::size_t d, RngStream& rng);

/// (1/n) sum_i x_i and sum_i ||x_i - mean||^2, written out directly.
ParamVector column_mean(const std::vector<ParamVector>& xs);
double deviation_sq(const std::vector<ParamVector>& xs);

/// Scalar samples for SyntheticNonConvex-style objectives: one feature per sample.
Dataset scalar_dataset(const std::vector<double>& values, std::size_t classes = 1);

/// `workers` shards that all hold indices [0, size): homogeneous data.
std::vector<Shard> identical_shards(std::size_t workers, std::size_t size);

/// Standard problem used by several tests: Gaussian blobs, Dirichlet split.
struct Fixture {
  Dataset data;
  std::vector<Shard> shards;
  std::unique_ptr<GradientOracle> oracle;
  Problem problem(std::size_t batch = 8, bool full_batch = false) const;
};
Fixture make_fixture(ModelKind kind, std::size_t workers, double conc, std::uint64_t seed, std::size_t dim = 4,
                     std::size_t samples = 400);

/// Records every minibatch drawn during a run, keyed by (worker, epoch, step, bootstrap).
class BatchRecorder {
 public:
  EpochHooks hooks();
  const std::vector<std::size_t>& at(std::size_t worker, std::size_t epoch, std::size_t step,
                                     bool bootstrap = false) const;
  std::size_t size() const { return batches_.size(); }

 private:
  mutable std::mutex mutex_;
  std::map<std::tuple<std::size_t, std::size_t, std::size_t, bool>, std::vector<std::size_t>> batches_;
};

enum class ReferenceMethod { kHeavyBall, kNesterov, kSgd };

/// Runs D-SUM epoch by epoch and, in lockstep, the reference method on the
/// minibatches D-SUM drew. Between epochs the reference gossips x and its
/// momentum buffer with the same matrix. Returns the largest |x_dsum - x_ref|
/// seen after any local step or gossip.
double reference_deviation(ReferenceMethod method, const Fixture& fx, const SumHyper& hyper,
                           const TopologySchedule& schedule, std::size_t epochs, std::uint64_t seed,
                           std::size_t batch = 8);

/// GT-DSUM against the classical gradient-tracking reference. GT-DSUM runs
/// `epochs` + 1 epochs so that every reference gradient has a recorded batch:
/// the reference initializes y from the bootstrap batch and evaluates g at
/// x^(t+1) on the batch GT-DSUM drew in epoch t+1. Returns the largest
/// |x_gtdsum - x_ref| over epochs 1..epochs.
double gt_reference_deviation(const Fixture& fx, const SumHyper& hyper, const TopologySchedule& schedule,
                              std::size_t epochs, std::uint64_t seed, std::size_t batch = 8,
                              bool full_batch = false);

/// max_k |a_k - b_k|
double max_abs_diff(const ParamVector& a, const ParamVector& b);

/// Schedule with one matrix for `epochs` epochs.
TopologySchedule static_schedule(const MixingMatrix& w, std::size_t epochs);

}  // namespace decmom::testing

#endif  // DECMOM_TESTS_SUPPORT_HPP
