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

#include <benchmark/benchmark.h>

#include "decmom/data.hpp"
#include "decmom/optim.hpp"

namespace {

using namespace decmom;

void BM_SumLocalStep(benchmark::State& state) {
  const auto d = static_cast<std::size_t>(state.range(0));
  ParamVector x(d, 1.0), v(d, 0.5), g(d, 0.01);
  SumHyper h;
  h.eta = 1e-6;
  for (auto _ : state) {
    sum_local_step(x, v, g, h);
    benchmark::DoNotOptimize(x.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(d));
}
BENCHMARK(BM_SumLocalStep)->RangeMultiplier(8)->Range(64, 1 << 18);

void BM_GossipRing(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto w = build_ring(n);
  std::vector<ParamVector> xs(n, ParamVector(4096, 1.0));
  for (auto _ : state) benchmark::DoNotOptimize(gossip_average(xs, w));
}
BENCHMARK(BM_GossipRing)->Arg(8)->Arg(32)->Arg(128);

void BM_GossipFullMesh(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto w = build_full_mesh(n);
  std::vector<ParamVector> xs(n, ParamVector(4096, 1.0));
  for (auto _ : state) benchmark::DoNotOptimize(gossip_average(xs, w));
}
BENCHMARK(BM_GossipFullMesh)->Arg(8)->Arg(32);

// One D-SUM epoch of logistic regression, n = 8, K = 10, batch 32.
void BM_DsumEpoch(benchmark::State& state) {
  SyntheticSpec spec;
  spec.classes = 10;
  spec.dim = 64;
  spec.samples = 4000;
  const auto ds = make_synthetic_blobs(spec, 1);
  RngStream rng({1, 0, 0, StreamPurpose::kPartition});
  const auto shards = dirichlet_partition(ds, 8, 0.5, rng);
  ModelSpec model;
  model.kind = ModelKind::kLogReg;
  const auto oracle = make_oracle(model, ds);
  Problem problem{oracle.get(), &ds, shards, 32, false};
  SumHyper h;
  h.algo = state.range(0) == 0 ? Algorithm::kDsum : Algorithm::kGtDsum;
  h.beta = 0.5;
  auto ring = std::make_shared<const MixingMatrix>(build_ring(8));
  auto cohort = make_cohort(h, TopologySchedule(ring, 1), oracle->initial_params(1), 1,
                            static_cast<std::size_t>(state.range(1)));
  for (auto _ : state) run_epoch(cohort, 0, problem);
}
BENCHMARK(BM_DsumEpoch)->ArgNames({"gt", "threads"})->Args({0, 1})->Args({1, 1})->Args({0, 4})->UseRealTime();

}  // namespace

BENCHMARK_MAIN();
