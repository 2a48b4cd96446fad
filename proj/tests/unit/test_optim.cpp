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

#include <gtest/gtest.h>

#include <cmath>
#include <memory>

#include "decmom/diagnostics.hpp"
#include "decmom/error.hpp"
#include "decmom/optim.hpp"
#include "decmom/reference.hpp"
#include "support.hpp"

namespace decmom {
namespace {

using testing::max_abs_diff;
using testing::static_schedule;

std::vector<ParamVector> snapshot_x(const Cohort& c) {
  std::vector<ParamVector> out;
  for (const auto& w : c.workers) out.push_back(w.x);
  return out;
}

SumHyper hyper_for(Algorithm algo, double alpha = 2.0, double beta = 0.9, double eta = 0.05,
                   std::size_t k = 5) {
  SumHyper h;
  h.algo = algo;
  h.alpha = alpha;
  h.beta = beta;
  h.eta = eta;
  h.k_local = k;
  return h;
}

TEST(SumLocalStep, HandComputedScalar) {
  SumHyper h;
  h.eta = 0.1;
  h.beta = 0.5;
  h.alpha = 2.0;
  ParamVector x{1.0}, v{1.0};
  const ParamVector g{0.5};
  sum_local_step(x, v, g, h);
  // u = 0.95, v' = 0.9, x' = 0.95 + 0.5 * (0.9 - 1) = 0.9
  EXPECT_NEAR(x[0], 0.90, 1e-15);
  EXPECT_NEAR(v[0], 0.90, 1e-15);
}

TEST(SumLocalStep, ZeroBetaIsPlainSgd) {
  SumHyper h;
  h.eta = 0.3;
  h.beta = 0.0;
  h.alpha = 7.0;
  ParamVector x{1.0, -2.0}, v{5.0, 5.0};
  sum_local_step(x, v, ParamVector{2.0, 1.0}, h);
  EXPECT_DOUBLE_EQ(x[0], 1.0 - 0.6);
  EXPECT_DOUBLE_EQ(x[1], -2.0 - 0.3);
}

TEST(SumLocalStep, ZeroGradientAtRestIsFixedPoint) {
  SumHyper h;
  ParamVector x{0.3, -1.0}, v = x;
  for (int t = 0; t < 10; ++t) sum_local_step(x, v, ParamVector{0.0, 0.0}, h);
  EXPECT_EQ(x, (ParamVector{0.3, -1.0}));
  EXPECT_EQ(v, x);
}

TEST(SumLocalStep, GuardsAgainstBlowUp) {
  SumHyper h;
  ParamVector x{1.0}, v{1.0};
  try {
    sum_local_step(x, v, ParamVector{1e300}, h, {3, 4, 5});
    FAIL() << "expected DivergenceError";
  } catch (const DivergenceError& e) {
    EXPECT_EQ(e.epoch(), 3u);
    EXPECT_EQ(e.step(), 4u);
    EXPECT_EQ(e.worker(), 5u);
  }
  ParamVector a{1.0}, b{1.0, 2.0};
  EXPECT_THROW(sum_local_step(a, b, ParamVector{1.0}, h), InvalidArgument);
}

TEST(SumHyperValidate, RejectsOutOfRange) {
  SumHyper h;
  EXPECT_NO_THROW(h.validate());
  auto bad = [](auto mutate) {
    SumHyper x;
    mutate(x);
    return x;
  };
  EXPECT_THROW(bad([](SumHyper& x) { x.beta = 1.0; }).validate(), InvalidArgument);
  EXPECT_THROW(bad([](SumHyper& x) { x.beta = -0.1; }).validate(), InvalidArgument);
  EXPECT_THROW(bad([](SumHyper& x) { x.eta = 0.0; }).validate(), InvalidArgument);
  EXPECT_THROW(bad([](SumHyper& x) { x.alpha = -1.0; }).validate(), InvalidArgument);
  EXPECT_THROW(bad([](SumHyper& x) { x.lambda = 1.5; }).validate(), InvalidArgument);
  EXPECT_THROW(bad([](SumHyper& x) { x.k_local = 0; }).validate(), InvalidArgument);
}

TEST(Algorithm, NamesRoundTrip) {
  for (auto a : {Algorithm::kVanillaSgd, Algorithm::kDsum, Algorithm::kGtDsum}) {
    EXPECT_EQ(parse_algorithm(to_string(a)), a);
  }
  EXPECT_THROW(parse_algorithm("adam"), InvalidArgument);
}

TEST(GossipAverage, FullMeshAveragesExactly) {
  const std::vector<ParamVector> in{{1.0}, {2.0}, {3.0}};
  for (const auto& out : gossip_average(in, build_full_mesh(3))) EXPECT_NEAR(out[0], 2.0, 1e-15);
}

TEST(GossipAverage, IdentityIsNoOp) {
  const std::vector<ParamVector> in{{1.0, 4.0}, {2.0, 5.0}};
  EXPECT_EQ(gossip_average(in, build_identity(2)), in);
}

TEST(GossipAverage, RingOfFour) {
  const std::vector<ParamVector> in{{0.0}, {1.0}, {2.0}, {3.0}};
  const auto out = gossip_average(in, build_ring(4));
  const double expected[] = {4.0 / 3.0, 1.0, 2.0, 5.0 / 3.0};
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(out[i][0], expected[i], 1e-15);
}

TEST(GossipAverage, MatchesNaiveMix) {
  RngStream rng({8, 0, 0, StreamPurpose::kTest});
  auto adj = Adjacency::random_connected(7, 0.3, rng);
  const auto w = build_metropolis_hastings(adj);
  const auto xs = testing::random_columns(7, 5, rng);
  const auto a = gossip_average(xs, w);
  const auto b = reference::mix(w.weights(), xs);
  for (std::size_t i = 0; i < 7; ++i) EXPECT_LT(max_abs_diff(a[i], b[i]), 1e-14);
}

TEST(GossipAverage, RejectsShapeMismatch) {
  EXPECT_THROW(gossip_average(std::vector<ParamVector>{{1.0}, {2.0}}, build_full_mesh(3)), InvalidArgument);
  EXPECT_THROW(gossip_average(std::vector<ParamVector>{{1.0}, {2.0, 3.0}}, build_full_mesh(2)), InvalidArgument);
}

TEST(MakeCohort, InitialState) {
  const ParamVector x0{1.0, 2.0};
  const auto c = make_cohort(SumHyper{}, static_schedule(build_ring(5), 3), x0, 1);
  ASSERT_EQ(c.size(), 5u);
  for (const auto& w : c.workers) {
    EXPECT_EQ(w.x, x0);
    EXPECT_EQ(w.v, x0);
    EXPECT_EQ(w.d_prev, (ParamVector{0.0, 0.0}));
  }
  EXPECT_FALSE(c.tracker_ready);
  EXPECT_THROW(make_cohort(SumHyper{}, static_schedule(build_ring(5), 3), ParamVector{}, 1), InvalidArgument);
}

// Two workers with identical data and K = 1, beta = 0 under full mesh: one
// epoch is one centralized SGD step on the average gradient.
TEST(DsumEpoch, OneStepFullMeshIsCentralizedSgd) {
  auto fx = testing::make_fixture(ModelKind::kLogReg, 2, 1.0, 5);
  fx.shards = testing::identical_shards(2, fx.data.size());
  const auto problem = fx.problem(0, true);
  const ParamVector x0 = fx.oracle->initial_params(5);
  auto c = make_cohort(hyper_for(Algorithm::kDsum, 2.0, 0.0, 0.1, 1), static_schedule(build_full_mesh(2), 1), x0, 5);
  dsum_epoch(c, 0, problem);
  const auto g = full_gradient(*fx.oracle, x0, fx.shards[0], fx.data).grad;
  ParamVector expected = x0;
  for (std::size_t k = 0; k < g.size(); ++k) expected[k] -= 0.1 * g[k];
  for (const auto& w : c.workers) EXPECT_LT(max_abs_diff(w.x, expected), 1e-15);
}

// With W = I the workers never talk: each runs its own SUM trajectory.
TEST(DsumEpoch, IdentityTopologyDecouplesWorkers) {
  const auto fx = testing::make_fixture(ModelKind::kSynthetic, 3, 0.5, 6);
  const auto problem = fx.problem(0, true);
  const ParamVector x0 = fx.oracle->initial_params(6);
  const SumHyper h = hyper_for(Algorithm::kDsum, 2.0, 0.9, 0.05, 4);
  auto c = make_cohort(h, static_schedule(build_identity(3), 3), x0, 6);
  for (std::size_t t = 0; t < 3; ++t) dsum_epoch(c, t, problem);
  for (std::size_t i = 0; i < 3; ++i) {
    ParamVector x = x0, v = x0;
    for (int s = 0; s < 12; ++s) {
      const auto g = full_gradient(*fx.oracle, x, fx.shards[i], fx.data).grad;
      sum_local_step(x, v, g, h);
    }
    EXPECT_LT(max_abs_diff(c.workers[i].x, x), 1e-14) << "worker " << i;
    EXPECT_LT(max_abs_diff(c.workers[i].v, v), 1e-14) << "worker " << i;
  }
}

TEST(DsumEpoch, SingleWorkerIsLocalSum) {
  const auto fx = testing::make_fixture(ModelKind::kMlp, 1, 1.0, 7);
  const auto problem = fx.problem(8);
  const ParamVector x0 = fx.oracle->initial_params(7);
  const SumHyper h = hyper_for(Algorithm::kDsum, 3.0, 0.8, 0.05, 3);
  auto c = make_cohort(h, static_schedule(build_full_mesh(1), 4), x0, 7);
  testing::BatchRecorder rec;
  for (std::size_t t = 0; t < 4; ++t) dsum_epoch(c, t, problem, rec.hooks());
  ParamVector x = x0, v = x0;
  for (std::size_t t = 0; t < 4; ++t) {
    for (std::size_t s = 0; s < 3; ++s) {
      sum_local_step(x, v, fx.oracle->value_and_grad(x, rec.at(0, t, s), fx.data).grad, h);
    }
  }
  EXPECT_EQ(c.workers[0].x, x);
  EXPECT_EQ(c.workers[0].v, v);
}

TEST(DsumEpoch, GossipPreservesMeanOfIterates) {
  const auto fx = testing::make_fixture(ModelKind::kLogReg, 6, 0.1, 8);
  const auto problem = fx.problem(8);
  auto c = make_cohort(hyper_for(Algorithm::kDsum), static_schedule(build_ring(6), 5), fx.oracle->initial_params(8), 8);
  std::vector<ParamVector> last(6);
  EpochHooks hooks;
  hooks.on_step = [&](const StepEvent& e) { last[e.worker].assign(e.x_after.begin(), e.x_after.end()); };
  for (std::size_t t = 0; t < 5; ++t) {
    dsum_epoch(c, t, problem, hooks);
    EXPECT_LT(max_abs_diff(testing::column_mean(last), average_x(c)), 1e-13) << "epoch " << t;
  }
}

TEST(DsumEpoch, VanillaResetsAuxiliaryAtBoundaries) {
  const auto fx = testing::make_fixture(ModelKind::kLogReg, 4, 0.5, 9);
  for (double beta : {0.0, 0.9}) {
    auto c = make_cohort(hyper_for(Algorithm::kVanillaSgd, 2.0, beta), static_schedule(build_ring(4), 3),
                         fx.oracle->initial_params(9), 9);
    for (std::size_t t = 0; t < 3; ++t) {
      dsum_epoch(c, t, fx.problem());
      for (const auto& w : c.workers) EXPECT_EQ(w.v, w.x);
    }
  }
}

// Vanilla with momentum is heavy ball inside an epoch.
TEST(DsumEpoch, VanillaMomentumIsLocalHeavyBall) {
  const auto fx = testing::make_fixture(ModelKind::kLogReg, 1, 1.0, 10);
  const SumHyper h = hyper_for(Algorithm::kVanillaSgd, 2.0, 0.7, 0.05, 6);
  const ParamVector x0 = fx.oracle->initial_params(10);
  auto c = make_cohort(h, static_schedule(build_full_mesh(1), 1), x0, 10);
  testing::BatchRecorder rec;
  dsum_epoch(c, 0, fx.problem(), rec.hooks());
  auto ref = reference::make_state(x0);
  for (std::size_t s = 0; s < 6; ++s) {
    reference::hb_step(ref, fx.oracle->value_and_grad(ref.x, rec.at(0, 0, s), fx.data).grad, 0.7, 0.05);
  }
  EXPECT_LT(max_abs_diff(c.workers[0].x, ref.x), 1e-13);
}

TEST(DsumEpoch, RejectsBadInputs) {
  const auto fx = testing::make_fixture(ModelKind::kLogReg, 3, 1.0, 11);
  auto c = make_cohort(SumHyper{}, static_schedule(build_full_mesh(4), 2), fx.oracle->initial_params(11), 11);
  EXPECT_THROW(dsum_epoch(c, 0, fx.problem()), InvalidArgument);  // 3 shards, 4 workers
  auto c3 = make_cohort(SumHyper{}, static_schedule(build_full_mesh(3), 2), fx.oracle->initial_params(11), 11);
  EXPECT_THROW(dsum_epoch(c3, 2, fx.problem()), InvalidArgument);
  EXPECT_THROW(dsum_epoch(c3, 0, fx.problem(0)), InvalidArgument);
  EXPECT_THROW(gtdsum_epoch(c3, 0, fx.problem()), StateError);
}

TEST(GtDsumEpoch, BootstrapsTrackerFromDedicatedBatch) {
  const auto fx = testing::make_fixture(ModelKind::kLogReg, 3, 1.0, 12);
  const ParamVector x0 = fx.oracle->initial_params(12);
  auto c = make_cohort(hyper_for(Algorithm::kGtDsum), static_schedule(build_ring(3), 2), x0, 12);
  testing::BatchRecorder rec;
  bootstrap_tracker(c, fx.problem(), rec.hooks());
  EXPECT_TRUE(c.tracker_ready);
  for (std::size_t i = 0; i < 3; ++i) {
    RngStream rng({12, i, 0, StreamPurpose::kGtBootstrap});
    const auto batch = sample_minibatch(fx.shards[i], 8, rng);
    EXPECT_EQ(rec.at(i, 0, 0, true), batch);
    EXPECT_EQ(c.workers[i].y, fx.oracle->value_and_grad(x0, batch, fx.data).grad);
  }
}

TEST(GtDsumEpoch, LambdaOneMatchesDsumIterates) {
  const auto fx = testing::make_fixture(ModelKind::kMlp, 4, 0.3, 13);
  SumHyper h = hyper_for(Algorithm::kGtDsum);
  h.lambda = 1.0;
  const ParamVector x0 = fx.oracle->initial_params(13);
  auto gt = make_cohort(h, static_schedule(build_ring(4), 6), x0, 13);
  h.algo = Algorithm::kDsum;
  auto ds = make_cohort(h, static_schedule(build_ring(4), 6), x0, 13);
  for (std::size_t t = 0; t < 6; ++t) {
    run_epoch(gt, t, fx.problem());
    run_epoch(ds, t, fx.problem());
    for (std::size_t i = 0; i < 4; ++i) {
      EXPECT_EQ(gt.workers[i].x, ds.workers[i].x);
      EXPECT_EQ(gt.workers[i].v, ds.workers[i].v);
    }
  }
}

// mean(y^t) = mean(y^0) + mean(d^(t-1)): the tracker follows the average pseudo-gradient.
TEST(GtDsumEpoch, TrackerMeanIdentity) {
  const auto fx = testing::make_fixture(ModelKind::kLogReg, 5, 0.2, 14);
  SumHyper h = hyper_for(Algorithm::kGtDsum, 2.0, 0.5, 0.05, 4);
  h.lambda = 0.9;
  auto c = make_cohort(h, static_schedule(build_ring(5), 30), fx.oracle->initial_params(14), 14);
  bootstrap_tracker(c, fx.problem());
  std::vector<ParamVector> y0;
  for (const auto& w : c.workers) y0.push_back(w.y);
  const ParamVector y0_bar = testing::column_mean(y0);
  for (std::size_t t = 0; t < 30; ++t) {
    gtdsum_epoch(c, t, fx.problem());
    std::vector<ParamVector> ys, ds;
    for (const auto& w : c.workers) {
      ys.push_back(w.y);
      ds.push_back(w.d_prev);
    }
    ParamVector expected = y0_bar;
    const ParamVector d_bar = testing::column_mean(ds);
    for (std::size_t k = 0; k < expected.size(); ++k) expected[k] += d_bar[k];
    EXPECT_LT(max_abs_diff(testing::column_mean(ys), expected), 1e-12) << "epoch " << t;
  }
}

TEST(GtDsumEpoch, PseudoGradientMatchesDefinition) {
  const auto fx = testing::make_fixture(ModelKind::kLogReg, 3, 1.0, 15);
  const SumHyper h = hyper_for(Algorithm::kGtDsum, 2.0, 0.5, 0.05, 3);
  auto c = make_cohort(h, static_schedule(build_ring(3), 2), fx.oracle->initial_params(15), 15);
  gtdsum_epoch(c, 0, fx.problem());
  const auto start = snapshot_x(c);
  gtdsum_epoch(c, 1, fx.problem());
  for (std::size_t i = 0; i < 3; ++i) {
    ParamVector d(start[i].size());
    for (std::size_t k = 0; k < d.size(); ++k) d[k] = (start[i][k] - c.workers[i].x[k]) / (3 * 0.05);
    EXPECT_LT(max_abs_diff(c.workers[i].d_prev, d), 1e-12);
  }
}

class ThreadCount : public ::testing::TestWithParam<Algorithm> {};

TEST_P(ThreadCount, ResultsIndependentOfThreads) {
  const auto fx = testing::make_fixture(ModelKind::kMlp, 8, 0.3, 16);
  SumHyper h = hyper_for(GetParam(), 2.0, 0.5, 0.05, 3);
  h.lambda = 0.9;
  const ParamVector x0 = fx.oracle->initial_params(16);
  auto one = make_cohort(h, static_schedule(build_ring(8), 4), x0, 16, 1);
  auto many = make_cohort(h, static_schedule(build_ring(8), 4), x0, 16, 8);
  for (std::size_t t = 0; t < 4; ++t) {
    run_epoch(one, t, fx.problem());
    run_epoch(many, t, fx.problem());
  }
  for (std::size_t i = 0; i < 8; ++i) {
    EXPECT_EQ(one.workers[i].x, many.workers[i].x);
    EXPECT_EQ(one.workers[i].v, many.workers[i].v);
    EXPECT_EQ(one.workers[i].y, many.workers[i].y);
  }
}

INSTANTIATE_TEST_SUITE_P(Algorithms, ThreadCount,
                         ::testing::Values(Algorithm::kVanillaSgd, Algorithm::kDsum, Algorithm::kGtDsum));

TEST(Run, EmitsOneRecordPerEpoch) {
  const auto fx = testing::make_fixture(ModelKind::kLogReg, 3, 1.0, 17);
  auto c = make_cohort(hyper_for(Algorithm::kDsum), static_schedule(build_ring(3), 4), fx.oracle->initial_params(17), 17);
  std::vector<std::size_t> seen;
  const auto out = run(c, 4, fx.problem(), {}, [&](const MetricsRecord& r) { seen.push_back(r.epoch); });
  EXPECT_FALSE(out.diverged);
  EXPECT_EQ(seen, (std::vector<std::size_t>{1, 2, 3, 4}));
  EXPECT_EQ(out.records.size(), 4u);
  EXPECT_DOUBLE_EQ(out.records[0].rho, build_ring(3).rho());
}

TEST(Run, RejectsZeroEpochsAndShortSchedules) {
  const auto fx = testing::make_fixture(ModelKind::kLogReg, 3, 1.0, 18);
  auto c = make_cohort(SumHyper{}, static_schedule(build_ring(3), 4), fx.oracle->initial_params(18), 18);
  EXPECT_THROW(run(c, 0, fx.problem(), {}), InvalidArgument);
  EXPECT_THROW(run(c, 5, fx.problem(), {}), InvalidArgument);
}

TEST(Run, DivergenceStopsAndKeepsPartialRecords) {
  const auto fx = testing::make_fixture(ModelKind::kSynthetic, 2, 1.0, 19);
  auto c = make_cohort(hyper_for(Algorithm::kDsum, 2.0, 0.9, 1e3, 5), static_schedule(build_full_mesh(2), 50),
                       fx.oracle->initial_params(19), 19);
  const auto out = run(c, 50, fx.problem(), {});
  EXPECT_TRUE(out.diverged);
  EXPECT_LT(out.records.size(), 50u);
  EXPECT_FALSE(out.divergence_message.empty());
}

}  // namespace
}  // namespace decmom
