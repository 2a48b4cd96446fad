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
#include "decmom/objectives.hpp"
#include "decmom/topology.hpp"

namespace {

using namespace decmom;

void BM_ValueAndGrad(benchmark::State& state) {
  SyntheticSpec spec;
  spec.classes = 10;
  spec.dim = 64;
  spec.samples = 1000;
  const auto ds = make_synthetic_blobs(spec, 2);
  ModelSpec model;
  model.kind = static_cast<ModelKind>(state.range(0));
  model.mlp_hidden = 32;
  const auto oracle = make_oracle(model, ds);
  const auto params = oracle->initial_params(2);
  std::vector<std::size_t> batch(32);
  for (std::size_t k = 0; k < batch.size(); ++k) batch[k] = (k * 37) % ds.size();
  for (auto _ : state) benchmark::DoNotOptimize(oracle->value_and_grad(params, batch, ds));
  state.SetLabel(oracle->name());
}
BENCHMARK(BM_ValueAndGrad)->DenseRange(0, 2);

void BM_SpectralGap(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  RngStream rng({3, 0, 0, StreamPurpose::kTest});
  const auto w = build_metropolis_hastings(Adjacency::random_connected(n, 0.2, rng));
  for (auto _ : state) benchmark::DoNotOptimize(spectral_gap(w.weights()));
}
BENCHMARK(BM_SpectralGap)->Arg(16)->Arg(64);

void BM_DirichletPartition(benchmark::State& state) {
  SyntheticSpec spec;
  spec.classes = 10;
  spec.dim = 4;
  spec.samples = 20000;
  const auto ds = make_synthetic_blobs(spec, 4);
  for (auto _ : state) {
    RngStream rng({4, 0, 0, StreamPurpose::kPartition});
    benchmark::DoNotOptimize(dirichlet_partition(ds, 16, 0.1, rng));
  }
}
BENCHMARK(BM_DirichletPartition);

}  // namespace
