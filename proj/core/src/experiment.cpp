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


#include "decmom/experiment.hpp"

#include <map>

#include "decmom/diagnostics.hpp"
#include "decmom/error.hpp"

namespace decmom {

namespace {

std::shared_ptr<const MixingMatrix> make_matrix(const RunConfig& config, const std::string& topology) {
  if (topology == "full_mesh") return std::make_shared<const MixingMatrix>(build_full_mesh(config.workers));
  if (topology == "ring") return std::make_shared<const MixingMatrix>(build_ring(config.workers));
  if (topology == "custom") {
    const Adjacency adj = read_adjacency(config.custom_adjacency);
    if (adj.size() != config.workers) {
      throw ConfigError("custom_adjacency", "matrix is " + std::to_string(adj.size()) + "x" +
                                                std::to_string(adj.size()) + " but workers = " +
                                                std::to_string(config.workers));
    }
    return std::make_shared<const MixingMatrix>(build_metropolis_hastings(adj));
  }
  throw ConfigError("topology", "unknown topology '" + topology + "'");
}

Dataset load_data(const RunConfig& config) {
  const DataConfig& d = config.data;
  if (d.source == "synthetic") return make_synthetic_blobs(d.synthetic, config.seed);
  const DataFormat format = d.source == "idx" ? DataFormat::kIdx : DataFormat::kCsv;
  return load_dataset(d.path, format, d.labels_path, d.max_samples);
}

}  // namespace

TopologySchedule build_schedule(const RunConfig& config) {
  // Builds each distinct topology once.
  std::map<std::string, std::shared_ptr<const MixingMatrix>> built;
  TopologySchedule schedule;
  for (const auto& entry : effective_schedule(config)) {
    auto& m = built[entry.topology];
    if (!m) m = make_matrix(config, entry.topology);
    schedule.append(entry.until_epoch, m);
  }
  return schedule;
}

Problem Experiment::problem() const {
  Problem p;
  p.oracle = oracle.get();
  p.data = &train;
  p.shards = shards;
  p.batch_size = config.data.batch_size;
  p.full_batch = config.data.full_batch;
  return p;
}

std::unique_ptr<Experiment> build_experiment(const RunConfig& config) {
  auto ex = std::make_unique<Experiment>();
  ex->config = config;
  Dataset all = load_data(config);
  all.check();
  if (config.model.kind == ModelKind::kSynthetic) {
    ex->train = std::move(all);
  } else {
    RngStream split_rng({config.seed, 0, 0, StreamPurpose::kSplit});
    auto [train, test] = split_train_test(all, config.data.test_fraction, split_rng);
    ex->train = std::move(train);
    ex->test = std::move(test);
  }
  if (ex->train.size() < config.workers) {
    throw ConfigError("workers", std::to_string(config.workers) + " workers but only " +
                                     std::to_string(ex->train.size()) + " training samples");
  }
  RngStream part_rng({config.seed, 0, 0, StreamPurpose::kPartition});
  ex->shards = dirichlet_partition(ex->train, config.workers, config.data.dirichlet, part_rng);
  ex->oracle = make_oracle(config.model, ex->train);
  const ParamVector x0 = ex->oracle->initial_params(config.seed);
  ex->cohort = make_cohort(config.hyper, build_schedule(config), x0, config.seed, config.threads);
  return ex;
}

RunOutcome run_experiment(Experiment& experiment, const RecordSink& sink, const EpochHooks& hooks) {
  const Problem problem = experiment.problem();
  DiagnosticsOptions options;
  options.tracker_every = experiment.config.diag_every;
  options.test = experiment.has_test() ? &experiment.test : nullptr;
  auto evaluate = [&](const Cohort& cohort, std::size_t completed) {
    return collect_metrics(cohort, problem, completed, options);
  };
  return run(experiment.cohort, experiment.config.epochs, problem, evaluate, sink, hooks);
}

}  // namespace decmom
