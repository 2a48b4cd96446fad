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

#include "decmom/optim.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <thread>

#include "decmom/error.hpp"

namespace decmom {

std::string_view to_string(Algorithm algo) {
  switch (algo) {
    case Algorithm::kVanillaSgd:
      return "vanilla";
    case Algorithm::kDsum:
      return "dsum";
    case Algorithm::kGtDsum:
      return "gtdsum";
  }
  return "?";
}

Algorithm parse_algorithm(std::string_view name) {
  if (name == "vanilla") return Algorithm::kVanillaSgd;
  if (name == "dsum") return Algorithm::kDsum;
  if (name == "gtdsum") return Algorithm::kGtDsum;
  throw InvalidArgument("unknown algorithm '" + std::string(name) + "' (expected vanilla|dsum|gtdsum)");
}

void SumHyper::validate() const {
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw InvalidArgument("alpha must be >= 0");
  if (!(beta >= 0.0 && beta < 1.0)) throw InvalidArgument("beta must be in [0, 1)");
  if (!(eta > 0.0) || !std::isfinite(eta)) throw InvalidArgument("eta must be > 0");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw InvalidArgument("lambda must be in [0, 1]");
  if (k_local < 1) throw InvalidArgument("k_local must be >= 1");
}

void guard_finite(std::span<const double> values, const StepContext& ctx, const char* what) {
  for (double v : values) {
    if (!std::isfinite(v) || std::abs(v) > kDivergenceMagnitude) {
      throw DivergenceError(ctx.epoch, ctx.step, ctx.worker, std::string(what) + " left the finite range");
    }
  }
}

void sum_local_step(std::span<double> x, std::span<double> v, std::span<const double> g, const SumHyper& hyper,
                    const StepContext& ctx) {
  if (x.size() != v.size() || x.size() != g.size()) throw InvalidArgument("sum_local_step: length mismatch");
  const double eta = hyper.eta;
  const double alpha_eta = hyper.alpha * hyper.eta;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double u_next = x[k] - eta * g[k];
    const double v_next = x[k] - alpha_eta * g[k];
    x[k] = u_next + hyper.beta * (v_next - v[k]);
    v[k] = v_next;
  }
  guard_finite(x, ctx, "x");
  guard_finite(v, ctx, "v");
}

std::vector<ParamVector> gossip_average(std::span<const ParamVector> vectors, const MixingMatrix& w) {
  const std::size_t n = w.size();
  if (vectors.size() != n) {
    throw InvalidArgument("gossip_average: " + std::to_string(vectors.size()) + " vectors for a " +
                          std::to_string(n) + "-worker matrix");
  }
  const std::size_t d = n == 0 ? 0 : vectors.front().size();
  for (const auto& v : vectors) {
    if (v.size() != d) throw InvalidArgument("gossip_average: vectors differ in length");
  }
  std::vector<ParamVector> out(n, ParamVector(d, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    auto& acc = out[i];
    for (std::size_t j = 0; j < n; ++j) {
      const double wij = w(i, j);
      if (wij == 0.0) continue;
      const auto& src = vectors[j];
      for (std::size_t k = 0; k < d; ++k) acc[k] += wij * src[k];
    }
  }
  return out;
}

namespace {

// Runs fn(i) for every worker. Worker i always goes to thread i % threads and
// exceptions are rethrown in worker order, so outcomes do not depend on the
// thread count.
template <typename Fn>
void for_each_worker(std::size_t n, std::size_t threads, Fn&& fn) {
  std::vector<std::exception_ptr> errors(n);
  auto body = [&](std::size_t i) {
    try {
      fn(i);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  const std::size_t pool = std::min(threads, n);
  if (pool <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
  } else {
    std::vector<std::jthread> team;
    team.reserve(pool);
    for (std::size_t t = 0; t < pool; ++t) {
      team.emplace_back([&, t] {
        for (std::size_t i = t; i < n; i += pool) body(i);
      });
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

void check_problem(const Cohort& cohort, const Problem& problem) {
  if (problem.oracle == nullptr || problem.data == nullptr) throw InvalidArgument("Problem: oracle and data are required");
  if (problem.shards.size() != cohort.size()) {
    throw InvalidArgument("Problem: " + std::to_string(problem.shards.size()) + " shards for " +
                          std::to_string(cohort.size()) + " workers");
  }
  if (!problem.full_batch && problem.batch_size == 0) throw InvalidArgument("Problem: batch_size must be positive");
}

std::vector<std::size_t> draw_batch(const Problem& problem, std::size_t worker, RngStream& rng) {
  const Shard& shard = problem.shards[worker];
  if (problem.full_batch) {
    if (shard.empty()) throw StateError("shard " + std::to_string(worker) + " is empty");
    return shard.indices;
  }
  return sample_minibatch(shard, problem.batch_size, rng);
}

// K local steps for one worker.
void local_phase(Cohort& cohort, std::size_t i, std::size_t epoch, const Problem& problem, const EpochHooks& hooks) {
  const SumHyper& h = cohort.hyper;
  WorkerState& w = cohort.workers[i];
  w.rng = RngStream({cohort.seed, i, epoch, StreamPurpose::kBatch});
  w.x_epoch_start = w.x;

  const std::size_t d = w.x.size();
  ParamVector applied(d), x_before, v_before;
  const bool tracing = static_cast<bool>(hooks.on_step);
  SumHyper heavy_ball = h;
  heavy_ball.alpha = 0.0;

  for (std::size_t step = 0; step < h.k_local; ++step) {
    const StepContext ctx{epoch, step, i};
    const auto batch = draw_batch(problem, i, w.rng);
    if (hooks.on_batch) hooks.on_batch({i, epoch, step, false, batch});

    const LossGrad lg = problem.oracle->value_and_grad(w.x, batch, *problem.data);
    if (!std::isfinite(lg.loss)) throw DivergenceError(epoch, step, i, "non-finite loss");

    if (h.algo == Algorithm::kGtDsum) {
      for (std::size_t k = 0; k < d; ++k) applied[k] = h.lambda * lg.grad[k] + (1.0 - h.lambda) * w.y[k];
    } else {
      std::copy(lg.grad.begin(), lg.grad.end(), applied.begin());
    }
    if (tracing) {
      x_before = w.x;
      v_before = w.v;
    }

    if (h.algo == Algorithm::kVanillaSgd) {
      if (h.beta == 0.0) {
        for (std::size_t k = 0; k < d; ++k) w.x[k] -= h.eta * applied[k];
        guard_finite(w.x, ctx, "x");
        w.v = w.x;
      } else {
        sum_local_step(w.x, w.v, applied, heavy_ball, ctx);
      }
    } else {
      sum_local_step(w.x, w.v, applied, h, ctx);
    }

    if (tracing) hooks.on_step({i, epoch, step, x_before, v_before, lg.grad, applied, w.x, w.v, lg.loss});
  }
}

std::vector<ParamVector> collect(const Cohort& cohort, ParamVector WorkerState::*field) {
  std::vector<ParamVector> out;
  out.reserve(cohort.size());
  for (const auto& w : cohort.workers) out.push_back(w.*field);
  return out;
}

void check_epoch(const Cohort& cohort, std::size_t epoch) {
  if (epoch >= cohort.schedule.end_epoch()) {
    throw InvalidArgument("epoch " + std::to_string(epoch) + " is beyond the topology schedule");
  }
}

}  // namespace

Cohort make_cohort(const SumHyper& hyper, TopologySchedule schedule, const ParamVector& x0, std::uint64_t seed,
                   std::size_t threads) {
  hyper.validate();
  if (x0.empty()) throw InvalidArgument("make_cohort: empty initial parameters");
  const std::size_t n = schedule.workers();
  Cohort cohort;
  cohort.hyper = hyper;
  cohort.schedule = std::move(schedule);
  cohort.seed = seed;
  cohort.threads = std::max<std::size_t>(threads, 1);
  cohort.workers.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    cohort.workers.push_back(WorkerState{x0, x0, ParamVector(x0.size(), 0.0), ParamVector(x0.size(), 0.0), x0,
                                         RngStream({seed, i, 0, StreamPurpose::kBatch})});
  }
  return cohort;
}

void bootstrap_tracker(Cohort& cohort, const Problem& problem, const EpochHooks& hooks) {
  check_problem(cohort, problem);
  for_each_worker(cohort.size(), cohort.threads, [&](std::size_t i) {
    WorkerState& w = cohort.workers[i];
    RngStream rng({cohort.seed, i, 0, StreamPurpose::kGtBootstrap});
    const auto batch = draw_batch(problem, i, rng);
    if (hooks.on_batch) hooks.on_batch({i, 0, 0, true, batch});
    const LossGrad lg = problem.oracle->value_and_grad(w.x, batch, *problem.data);
    if (!std::isfinite(lg.loss)) throw DivergenceError(0, 0, i, "non-finite loss in tracker bootstrap");
    w.y = lg.grad;
    std::fill(w.d_prev.begin(), w.d_prev.end(), 0.0);
  });
  cohort.tracker_ready = true;
}

void dsum_epoch(Cohort& cohort, std::size_t epoch, const Problem& problem, const EpochHooks& hooks) {
  check_problem(cohort, problem);
  check_epoch(cohort, epoch);
  for_each_worker(cohort.size(), cohort.threads, [&](std::size_t i) { local_phase(cohort, i, epoch, problem, hooks); });

  // Barrier: every worker's x^(t),K and v^(t),K is final from here on.
  const MixingMatrix& w = cohort.schedule.lookup(epoch);
  auto xs = gossip_average(collect(cohort, &WorkerState::x), w);
  if (cohort.hyper.algo == Algorithm::kVanillaSgd) {
    for (std::size_t i = 0; i < cohort.size(); ++i) {
      cohort.workers[i].x = std::move(xs[i]);
      cohort.workers[i].v = cohort.workers[i].x;
    }
    return;
  }
  auto vs = gossip_average(collect(cohort, &WorkerState::v), w);
  for (std::size_t i = 0; i < cohort.size(); ++i) {
    cohort.workers[i].x = std::move(xs[i]);
    cohort.workers[i].v = std::move(vs[i]);
  }
}

void gtdsum_epoch(Cohort& cohort, std::size_t epoch, const Problem& problem, const EpochHooks& hooks) {
  check_problem(cohort, problem);
  check_epoch(cohort, epoch);
  if (cohort.hyper.algo != Algorithm::kGtDsum) throw StateError("gtdsum_epoch: cohort is not configured for GT-DSUM");
  if (!cohort.tracker_ready) bootstrap_tracker(cohort, problem, hooks);

  for_each_worker(cohort.size(), cohort.threads, [&](std::size_t i) { local_phase(cohort, i, epoch, problem, hooks); });

  const MixingMatrix& w = cohort.schedule.lookup(epoch);
  auto xs = gossip_average(collect(cohort, &WorkerState::x), w);
  auto vs = gossip_average(collect(cohort, &WorkerState::v), w);

  const std::size_t n = cohort.size();
  const double scale = 1.0 / (static_cast<double>(cohort.hyper.k_local) * cohort.hyper.eta);
  std::vector<ParamVector> d(n), tracked(n);
  for (std::size_t i = 0; i < n; ++i) {
    const WorkerState& ws = cohort.workers[i];
    const std::size_t dim = ws.x.size();
    d[i].resize(dim);
    tracked[i].resize(dim);
    for (std::size_t k = 0; k < dim; ++k) {
      d[i][k] = (ws.x_epoch_start[k] - xs[i][k]) * scale;
      tracked[i][k] = ws.y[k] + d[i][k] - ws.d_prev[k];
    }
  }
  auto ys = gossip_average(tracked, w);

  for (std::size_t i = 0; i < n; ++i) {
    WorkerState& ws = cohort.workers[i];
    ws.x = std::move(xs[i]);
    ws.v = std::move(vs[i]);
    ws.y = std::move(ys[i]);
    ws.d_prev = std::move(d[i]);
    guard_finite(ws.y, {epoch, cohort.hyper.k_local, i}, "tracker y");
  }
}

void run_epoch(Cohort& cohort, std::size_t epoch, const Problem& problem, const EpochHooks& hooks) {
  if (cohort.hyper.algo == Algorithm::kGtDsum) {
    gtdsum_epoch(cohort, epoch, problem, hooks);
  } else {
    dsum_epoch(cohort, epoch, problem, hooks);
  }
}

RunOutcome run(Cohort& cohort, std::size_t epochs, const Problem& problem, const EpochEvaluator& evaluate,
               const RecordSink& sink, const EpochHooks& hooks) {
  if (epochs == 0) throw InvalidArgument("run: epochs must be >= 1");
  if (cohort.schedule.end_epoch() < epochs) {
    throw InvalidArgument("run: topology schedule covers " + std::to_string(cohort.schedule.end_epoch()) +
                          " epochs, need " + std::to_string(epochs));
  }
  check_problem(cohort, problem);
  RunOutcome outcome;
  for (std::size_t t = 0; t < epochs; ++t) {
    try {
      run_epoch(cohort, t, problem, hooks);
    } catch (const DivergenceError& e) {
      outcome.diverged = true;
      outcome.divergence_message = e.what();
      return outcome;
    }
    MetricsRecord rec;
    if (evaluate) {
      rec = evaluate(cohort, t + 1);
    } else {
      rec.rho = cohort.schedule.lookup(t).rho();
    }
    rec.epoch = t + 1;
    if (sink) sink(rec);
    outcome.records.push_back(rec);
  }
  return outcome;
}

}  // namespace decmom
