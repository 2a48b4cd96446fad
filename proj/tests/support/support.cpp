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


#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "decmom/reference.hpp"

namespace decmom::testing {

std::vector<double> jacobi_eigenvalues(const SquareMatrix& m, double tol) {
  const std::size_t n = m.size();
  std::vector<std::vector<double>> a(n, std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) a[i][j] = m(i, j);
  }
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) off += a[i][j] * a[i][j];
    }
    if (off < tol * tol) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (a[p][q] == 0.0) continue;
        const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a[k][p];
          const double akq = a[k][q];
          a[k][p] = c * akp - s * akq;
          a[k][q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a[p][k];
          const double aqk = a[q][k];
          a[p][k] = c * apk - s * aqk;
          a[q][k] = s * apk + c * aqk;
        }
      }
    }
  }
  std::vector<double> eig(n);
  for (std::size_t i = 0; i < n; ++i) eig[i] = a[i][i];
  std::sort(eig.begin(), eig.end(), std::greater<>());
  return eig;
}

double jacobi_spectral_gap(const SquareMatrix& a) {
  const auto eig = jacobi_eigenvalues(a);
  if (eig.size() < 2) return 1.0;
  const double worst = std::max(std::abs(eig[1]), std::abs(eig.back()));
  return 1.0 - worst * worst;
}

std::vector<ParamVector> random_columns(std::size_t n, std::size_t d, RngStream& rng) {
  std::vector<ParamVector> xs(n, ParamVector(d));
  for (auto& x : xs) {
    for (auto& v : x) v = rng.normal();
  }
  return xs;
}

ParamVector column_mean(const std::vector<ParamVector>& xs) {
  ParamVector mean(xs.front().size(), 0.0);
  for (const auto& x : xs) {
    for (std::size_t k = 0; k < x.size(); ++k) mean[k] += x[k];
  }
  for (auto& v : mean) v /= static_cast<double>(xs.size());
  return mean;
}

double deviation_sq(const std::vector<ParamVector>& xs) {
  const ParamVector mean = column_mean(xs);
  double s = 0.0;
  for (const auto& x : xs) {
    for (std::size_t k = 0; k < x.size(); ++k) s += (x[k] - mean[k]) * (x[k] - mean[k]);
  }
  return s;
}

Dataset scalar_dataset(const std::vector<double>& values, std::size_t classes) {
  Dataset ds;
  ds.name = "scalar";
  ds.dim = 1;
  ds.classes = classes;
  ds.features = values;
  ds.labels.assign(values.size(), 0);
  for (std::size_t k = 0; k < values.size(); ++k) ds.labels[k] = static_cast<std::uint32_t>(k % classes);
  return ds;
}

std::vector<Shard> identical_shards(std::size_t workers, std::size_t size) {
  std::vector<Shard> shards(workers);
  for (std::size_t i = 0; i < workers; ++i) {
    shards[i].owner = i;
    for (std::size_t k = 0; k < size; ++k) shards[i].indices.push_back(k);
  }
  return shards;
}

Problem Fixture::problem(std::size_t batch, bool full_batch) const {
  Problem p;
  p.oracle = oracle.get();
  p.data = &data;
  p.shards = shards;
  p.batch_size = batch;
  p.full_batch = full_batch;
  return p;
}

Fixture make_fixture(ModelKind kind, std::size_t workers, double conc, std::uint64_t seed, std::size_t dim,
                     std::size_t samples) {
  Fixture f;
  SyntheticSpec spec;
  spec.classes = 4;
  spec.dim = dim;
  spec.samples = samples;
  f.data = make_synthetic_blobs(spec, seed);
  RngStream rng({seed, 0, 0, StreamPurpose::kPartition});
  f.shards = dirichlet_partition(f.data, workers, conc, rng);
  ModelSpec model;
  model.kind = kind;
  model.mlp_hidden = 6;
  f.oracle = make_oracle(model, f.data);
  return f;
}

EpochHooks BatchRecorder::hooks() {
  EpochHooks h;
  h.on_batch = [this](const BatchEvent& e) {
    std::lock_guard lock(mutex_);
    batches_[{e.worker, e.epoch, e.step, e.bootstrap}] = {e.indices.begin(), e.indices.end()};
  };
  return h;
}

const std::vector<std::size_t>& BatchRecorder::at(std::size_t worker, std::size_t epoch, std::size_t step,
                                                  bool bootstrap) const {
  std::lock_guard lock(mutex_);
  auto it = batches_.find({worker, epoch, step, bootstrap});
  if (it == batches_.end()) throw std::out_of_range("BatchRecorder: no batch recorded for that key");
  return it->second;
}

double max_abs_diff(const ParamVector& a, const ParamVector& b) {
  double worst = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) worst = std::max(worst, std::abs(a[k] - b[k]));
  return worst;
}

double reference_deviation(ReferenceMethod method, const Fixture& fx, const SumHyper& hyper,
                           const TopologySchedule& schedule, std::size_t epochs, std::uint64_t seed,
                           std::size_t batch) {
  const Problem problem = fx.problem(batch);
  const ParamVector x0 = fx.oracle->initial_params(seed);
  Cohort cohort = make_cohort(hyper, schedule, x0, seed);
  const std::size_t n = cohort.size();
  std::vector<reference::ReferenceState> ref(n, reference::make_state(x0));

  // x after each local step, keyed by (worker, epoch, step).
  std::map<std::tuple<std::size_t, std::size_t, std::size_t>, ParamVector> stepped;
  BatchRecorder recorder;
  EpochHooks hooks = recorder.hooks();
  hooks.on_step = [&](const StepEvent& e) {
    stepped[{e.worker, e.epoch, e.step}] = ParamVector(e.x_after.begin(), e.x_after.end());
  };

  double worst = 0.0;
  for (std::size_t t = 0; t < epochs; ++t) {
    run_epoch(cohort, t, problem, hooks);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = 0; k < hyper.k_local; ++k) {
        const auto& b = recorder.at(i, t, k);
        const auto g = fx.oracle->value_and_grad(ref[i].x, b, fx.data).grad;
        switch (method) {
          case ReferenceMethod::kHeavyBall: reference::hb_step(ref[i], g, hyper.beta, hyper.eta); break;
          case ReferenceMethod::kNesterov: reference::nesterov_step(ref[i], g, hyper.beta, hyper.eta); break;
          case ReferenceMethod::kSgd: reference::sgd_step(ref[i], g, hyper.eta); break;
        }
        worst = std::max(worst, max_abs_diff(stepped.at({i, t, k}), ref[i].x));
      }
    }
    std::vector<ParamVector> xs, us;
    for (const auto& r : ref) {
      xs.push_back(r.x);
      us.push_back(r.u);
    }
    const auto& w = schedule.lookup(t).weights();
    xs = reference::mix(w, xs);
    us = reference::mix(w, us);
    for (std::size_t i = 0; i < n; ++i) {
      ref[i].x = xs[i];
      ref[i].u = us[i];
      worst = std::max(worst, max_abs_diff(cohort.workers[i].x, ref[i].x));
    }
  }
  return worst;
}

double gt_reference_deviation(const Fixture& fx, const SumHyper& hyper, const TopologySchedule& schedule,
                              std::size_t epochs, std::uint64_t seed, std::size_t batch, bool full_batch) {
  const Problem problem = fx.problem(batch, full_batch);
  const ParamVector x0 = fx.oracle->initial_params(seed);
  Cohort cohort = make_cohort(hyper, schedule, x0, seed);
  const std::size_t n = cohort.size();
  BatchRecorder recorder;
  const EpochHooks hooks = recorder.hooks();
  std::vector<std::vector<ParamVector>> xs_after(epochs + 1);
  for (std::size_t t = 0; t <= epochs; ++t) {
    run_epoch(cohort, t, problem, hooks);
    for (const auto& w : cohort.workers) xs_after[t].push_back(w.x);
  }

  // Call c of worker i: c = 0 is the bootstrap batch, c >= 1 the batch of epoch c.
  std::vector<std::size_t> calls(n, 0);
  const reference::GradientFn grad = [&](std::size_t i, const ParamVector& x) {
    const std::size_t c = calls[i]++;
    const auto& b = c == 0 ? recorder.at(i, 0, 0, true) : recorder.at(i, c, 0);
    return fx.oracle->value_and_grad(x, b, fx.data).grad;
  };
  auto ref = reference::gt_init(x0, n, grad);
  double worst = 0.0;
  for (std::size_t t = 0; t < epochs; ++t) {
    reference::vanilla_gt_step(ref, schedule.lookup(t).weights(), grad, hyper.eta);
    for (std::size_t i = 0; i < n; ++i) worst = std::max(worst, max_abs_diff(xs_after[t][i], ref[i].x));
  }
  return worst;
}

TopologySchedule static_schedule(const MixingMatrix& w, std::size_t epochs) {
  return TopologySchedule(std::make_shared<const MixingMatrix>(w), epochs);
}

}  // namespace decmom::testing
