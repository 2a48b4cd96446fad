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


#ifndef DECMOM_EXPERIMENT_HPP
#define DECMOM_EXPERIMENT_HPP

#include <memory>
#include <vector>

#include "decmom/config.hpp"
#include "decmom/data.hpp"
#include "decmom/objectives.hpp"
#include "decmom/optim.hpp"
#include "decmom/topology.hpp"

namespace decmom {

/// Mixing-matrix schedule for a config. Custom adjacency files are read here.
TopologySchedule build_schedule(const RunConfig& config);

/// Everything a run needs, built deterministically from (config, seed).
///
/// Classifier models train on a seeded train/test split; the synthetic model
/// uses every sample for training and has no test set.
struct Experiment {
  RunConfig config;
  Dataset train;
  Dataset test;
  std::vector<Shard> shards;
  std::unique_ptr<GradientOracle> oracle;
  Cohort cohort;

  /// View over the members above; invalid once the experiment moves.
  Problem problem() const;
  bool has_test() const noexcept { return test.size() > 0; }
};

/// Throws ConfigError/IoError/TopologyError on unusable inputs.
std::unique_ptr<Experiment> build_experiment(const RunConfig& config);

/// Runs all configured epochs and streams one record per epoch into `sink`.
RunOutcome run_experiment(Experiment& experiment, const RecordSink& sink = {}, const EpochHooks& hooks = {});

}  // namespace decmom

#endif  // DECMOM_EXPERIMENT_HPP
