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

#include "decmom/diagnostics.hpp"

#include <algorithm>
#include <cmath>

#include "decmom/error.hpp"

namespace decmom {

namespace {

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double diff = a[k] - b[k];
    s += diff * diff;
  }
  return s;
}

double norm(std::span<const double> a) {
  double s = 0.0;
  for (double v : a) s += v * v;
  return std::sqrt(s);
}

std::vector<ParamVector> local_gradients(const Problem& problem, std::span<const double> x) {
  std::vector<ParamVector> grads;
  grads.reserve(problem.shards.size());
  for (const auto& shard : problem.shards) grads.push_back(full_gradient(*problem.oracle, x, shard, *problem.data).grad);
  return grads;
}

}  // namespace

ParamVector average(std::span<const ParamVector> vectors) {
  if (vectors.empty()) throw InvalidArgument("average: no vectors");
  ParamVector mean(vectors.front().size(), 0.0);
  for (const auto& v : vectors) {
    if (v.size() != mean.size()) throw InvalidArgument("average: length mismatch");
    for (std::size_t k = 0; k < v.size(); ++k) mean[k] += v[k];
  }
  const double inv = 1.0 / static_cast<double>(vectors.size());
  for (auto& m : mean) m *= inv;
  return mean;
}

ParamVector average_x(const Cohort& cohort) {
  std::vector<ParamVector> xs;
  xs.reserve(cohort.size());
  for (const auto& w : cohort.workers) xs.push_back(w.x);
  return average(xs);
}

double consensus_distance(std::span<const ParamVector> xs) {
  const ParamVector mean = average(xs);
  double total = 0.0;
  for (const auto& x : xs) total += squared_distance(x, mean);
  return total / static_cast<double>(xs.size());
}

double consensus_distance(const Cohort& cohort) {
  std::vector<ParamVector> xs;
  xs.reserve(cohort.size());
  for (const auto& w : cohort.workers) xs.push_back(w.x);
  return consensus_distance(xs);
}

ParamVector global_gradient(const Problem& problem, std::span<const double> x) {
  return average(local_gradients(problem, x));
}

double tracker_error(const Cohort& cohort, const Problem& problem) {
  if (cohort.hyper.algo != Algorithm::kGtDsum) throw StateError("tracker_error: only defined under GT-DSUM");
  double worst = 0.0;
  for (const auto& w : cohort.workers) {
    const ParamVector target = global_gradient(problem, w.x);
    worst = std::max(worst, squared_distance(w.y, target));
  }
  return std::sqrt(worst);
}

double heterogeneity(const Problem& problem, std::span<const double> x) {
  const auto grads = local_gradients(problem, x);
  const ParamVector mean = average(grads);
  double total = 0.0;
  for (const auto& g : grads) total += squared_distance(g, mean);
  return total / static_cast<double>(grads.size());
}

TestEvaluation evaluate_test(const GradientOracle& oracle, std::span<const double> x, const Dataset& test) {
  if (test.size() == 0) throw InvalidArgument("evaluate_test: empty test set");
  if (!oracle.is_classifier()) throw StateError("evaluate_test: " + oracle.name() + " is not a classifier");
  std::vector<std::size_t> all(test.size());
  for (std::size_t k = 0; k < all.size(); ++k) all[k] = k;
  TestEvaluation out;
  out.loss = oracle.value(x, all, test);
  std::size_t correct = 0;
  for (std::size_t k = 0; k < test.size(); ++k) {
    if (oracle.predict(x, test, k) == test.labels[k]) ++correct;
  }
  out.accuracy = static_cast<double>(correct) / static_cast<double>(test.size());
  return out;
}

double stochastic_variance(const Problem& problem, std::span<const double> x, std::uint64_t seed,
                           std::size_t draws) {
  if (draws == 0) throw InvalidArgument("stochastic_variance: draws must be positive");
  double total = 0.0;
  for (std::size_t i = 0; i < problem.shards.size(); ++i) {
    const auto& shard = problem.shards[i];
    const ParamVector full = full_gradient(*problem.oracle, x, shard, *problem.data).grad;
    RngStream rng({seed, i, 0, StreamPurpose::kSigma});
    double acc = 0.0;
    for (std::size_t r = 0; r < draws; ++r) {
      const auto batch = sample_minibatch(shard, problem.batch_size, rng);
      acc += squared_distance(problem.oracle->value_and_grad(x, batch, *problem.data).grad, full);
    }
    total += acc / static_cast<double>(draws);
  }
  return total / static_cast<double>(problem.shards.size());
}

MetricsRecord collect_metrics(const Cohort& cohort, const Problem& problem, std::size_t completed_epochs,
                              const DiagnosticsOptions& options) {
  MetricsRecord rec;
  rec.epoch = completed_epochs;
  rec.rho = cohort.schedule.lookup(completed_epochs == 0 ? 0 : completed_epochs - 1).rho();

  double loss = 0.0;
  for (std::size_t i = 0; i < cohort.size(); ++i) {
    loss += problem.oracle->value(cohort.workers[i].x, problem.shards[i].indices, *problem.data);
  }
  rec.train_loss = loss / static_cast<double>(cohort.size());

  const ParamVector x_bar = average_x(cohort);
  const auto grads = local_gradients(problem, x_bar);
  const ParamVector g_bar = average(grads);
  rec.grad_norm_avg = norm(g_bar);
  double spread = 0.0;
  for (const auto& g : grads) spread += squared_distance(g, g_bar);
  rec.heterogeneity = spread / static_cast<double>(grads.size());

  rec.consensus_dist = consensus_distance(cohort);

  if (options.test != nullptr && problem.oracle->is_classifier()) {
    rec.test_acc = evaluate_test(*problem.oracle, x_bar, *options.test).accuracy;
  }
  const std::size_t every = std::max<std::size_t>(options.tracker_every, 1);
  if (cohort.hyper.algo == Algorithm::kGtDsum && cohort.tracker_ready && completed_epochs % every == 0) {
    rec.tracker_err = tracker_error(cohort, problem);
  }
  return rec;
}

}  // namespace decmom
