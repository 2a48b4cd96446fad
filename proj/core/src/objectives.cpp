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

#include "decmom/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "decmom/error.hpp"
#include "decmom/rng.hpp"

namespace decmom {

namespace {

// Softmax cross-entropy of `logits` against `label`. Overwrites `logits` with
// the probabilities. Uses the log-sum-exp shift, so it never overflows.
double softmax_xent(std::span<double> logits, std::size_t label) {
  const double peak = *std::max_element(logits.begin(), logits.end());
  const double target = logits[label];
  double sum = 0.0;
  for (auto& z : logits) {
    z = std::exp(z - peak);
    sum += z;
  }
  for (auto& z : logits) z /= sum;
  return std::log(sum) + peak - target;
}

std::size_t argmax_lowest(std::span<const double> v) {
  std::size_t best = 0;
  for (std::size_t c = 1; c < v.size(); ++c) {
    if (v[c] > v[best]) best = c;
  }
  return best;
}

}  // namespace

// ---------------------------------------------------------------- base

void GradientOracle::check_args(std::span<const double> params, std::span<const std::size_t> batch,
                                const Dataset& ds) const {
  if (params.size() != param_dim()) {
    throw InvalidArgument(name() + ": parameter length " + std::to_string(params.size()) + " != " +
                          std::to_string(param_dim()));
  }
  if (batch.empty()) throw InvalidArgument(name() + ": empty batch");
  for (auto idx : batch) {
    if (idx >= ds.size()) throw InvalidArgument(name() + ": batch index out of range");
  }
}

LossGrad GradientOracle::value_and_grad(std::span<const double> params, std::span<const std::size_t> batch,
                                        const Dataset& ds) const {
  check_args(params, batch, ds);
  LossGrad out;
  out.grad.assign(param_dim(), 0.0);
  const double total = accumulate(params, batch, ds, out.grad);
  const double inv = 1.0 / static_cast<double>(batch.size());
  out.loss = total * inv;
  for (auto& g : out.grad) g *= inv;
  return out;
}

double GradientOracle::value(std::span<const double> params, std::span<const std::size_t> batch,
                             const Dataset& ds) const {
  check_args(params, batch, ds);
  return accumulate_loss(params, batch, ds) * (1.0 / static_cast<double>(batch.size()));
}

double GradientOracle::accumulate_loss(std::span<const double> params, std::span<const std::size_t> batch,
                                       const Dataset& ds) const {
  std::vector<double> scratch(param_dim(), 0.0);
  return accumulate(params, batch, ds, scratch);
}

std::size_t GradientOracle::predict(std::span<const double>, const Dataset&, std::size_t) const {
  throw StateError(name() + " is not a classifier");
}

// ---------------------------------------------------------------- synthetic

SyntheticNonConvex::SyntheticNonConvex(std::size_t dim, std::vector<double> amplitudes)
    : dim_(dim), amp_(std::move(amplitudes)) {
  if (dim_ == 0) throw InvalidArgument("SyntheticNonConvex: dim must be positive");
  if (amp_.size() != dim_) throw InvalidArgument("SyntheticNonConvex: one amplitude per coordinate");
  for (double a : amp_) {
    if (!(a >= 0.0) || !std::isfinite(a)) throw InvalidArgument("SyntheticNonConvex: amplitudes must be >= 0");
  }
}

ParamVector SyntheticNonConvex::initial_params(std::uint64_t seed) const {
  RngStream rng({seed, 0, 0, StreamPurpose::kInit});
  ParamVector x(dim_);
  for (auto& v : x) v = 6.0 * rng.uniform01() - 3.0;
  return x;
}

double SyntheticNonConvex::accumulate(std::span<const double> params, std::span<const std::size_t> batch,
                                      const Dataset& ds, std::span<double> grad_sum) const {
  if (ds.dim != dim_) throw InvalidArgument("SyntheticNonConvex: dataset dimension mismatch");
  double loss = 0.0;
  for (auto idx : batch) {
    const auto c = ds.row(idx);
    for (std::size_t k = 0; k < dim_; ++k) {
      const double u = params[k] - c[k];
      const double s = std::sin(u);
      loss += u * u + amp_[k] * s * s;
      grad_sum[k] += 2.0 * u + amp_[k] * std::sin(2.0 * u);
    }
  }
  return loss;
}

// ---------------------------------------------------------------- logistic regression

LogisticRegression::LogisticRegression(std::size_t dim, std::size_t classes) : dim_(dim), classes_(classes) {
  if (dim_ == 0 || classes_ < 2) throw InvalidArgument("LogisticRegression: need dim >= 1 and classes >= 2");
}

ParamVector LogisticRegression::initial_params(std::uint64_t) const { return ParamVector(param_dim(), 0.0); }

void LogisticRegression::logits(std::span<const double> params, std::span<const double> x,
                                std::span<double> out) const {
  const double* bias = params.data() + classes_ * dim_;
  for (std::size_t c = 0; c < classes_; ++c) {
    const double* w = params.data() + c * dim_;
    double z = bias[c];
    for (std::size_t j = 0; j < dim_; ++j) z += w[j] * x[j];
    out[c] = z;
  }
}

std::size_t LogisticRegression::predict(std::span<const double> params, const Dataset& ds, std::size_t idx) const {
  std::vector<double> z(classes_);
  logits(params, ds.row(idx), z);
  return argmax_lowest(z);
}

double LogisticRegression::accumulate(std::span<const double> params, std::span<const std::size_t> batch,
                                      const Dataset& ds, std::span<double> grad_sum) const {
  if (ds.dim != dim_ || ds.classes > classes_) throw InvalidArgument("LogisticRegression: dataset shape mismatch");
  std::vector<double> p(classes_);
  double* gbias = grad_sum.data() + classes_ * dim_;
  double loss = 0.0;
  for (auto idx : batch) {
    const auto x = ds.row(idx);
    const std::size_t y = ds.labels[idx];
    logits(params, x, p);
    loss += softmax_xent(p, y);
    for (std::size_t c = 0; c < classes_; ++c) {
      const double delta = p[c] - (c == y ? 1.0 : 0.0);
      double* gw = grad_sum.data() + c * dim_;
      for (std::size_t j = 0; j < dim_; ++j) gw[j] += delta * x[j];
      gbias[c] += delta;
    }
  }
  return loss;
}

// ---------------------------------------------------------------- MLP

MlpOneHidden::MlpOneHidden(std::size_t dim, std::size_t hidden, std::size_t classes)
    : dim_(dim), hidden_(hidden), classes_(classes) {
  if (dim_ == 0 || hidden_ == 0 || classes_ < 2) {
    throw InvalidArgument("MlpOneHidden: need dim >= 1, hidden >= 1, classes >= 2");
  }
}

ParamVector MlpOneHidden::initial_params(std::uint64_t seed) const {
  RngStream rng({seed, 0, 0, StreamPurpose::kInit});
  ParamVector p(param_dim(), 0.0);
  const double r1 = std::sqrt(6.0 / static_cast<double>(dim_ + hidden_));
  const double r2 = std::sqrt(6.0 / static_cast<double>(hidden_ + classes_));
  std::size_t off = 0;
  for (std::size_t k = 0; k < hidden_ * dim_; ++k) p[off + k] = r1 * (2.0 * rng.uniform01() - 1.0);
  off += hidden_ * dim_ + hidden_;
  for (std::size_t k = 0; k < classes_ * hidden_; ++k) p[off + k] = r2 * (2.0 * rng.uniform01() - 1.0);
  return p;
}

void MlpOneHidden::forward(std::span<const double> params, std::span<const double> x, std::span<double> hidden,
                           std::span<double> logits) const {
  const double* w1 = params.data();
  const double* b1 = w1 + hidden_ * dim_;
  const double* w2 = b1 + hidden_;
  const double* b2 = w2 + classes_ * hidden_;
  for (std::size_t h = 0; h < hidden_; ++h) {
    double a = b1[h];
    const double* row = w1 + h * dim_;
    for (std::size_t j = 0; j < dim_; ++j) a += row[j] * x[j];
    hidden[h] = std::tanh(a);
  }
  for (std::size_t c = 0; c < classes_; ++c) {
    double z = b2[c];
    const double* row = w2 + c * hidden_;
    for (std::size_t h = 0; h < hidden_; ++h) z += row[h] * hidden[h];
    logits[c] = z;
  }
}

std::size_t MlpOneHidden::predict(std::span<const double> params, const Dataset& ds, std::size_t idx) const {
  std::vector<double> hidden(hidden_), z(classes_);
  forward(params, ds.row(idx), hidden, z);
  return argmax_lowest(z);
}

double MlpOneHidden::accumulate(std::span<const double> params, std::span<const std::size_t> batch,
                                const Dataset& ds, std::span<double> grad_sum) const {
  if (ds.dim != dim_ || ds.classes > classes_) throw InvalidArgument("MlpOneHidden: dataset shape mismatch");
  const double* w2 = params.data() + hidden_ * dim_ + hidden_;
  double* gw1 = grad_sum.data();
  double* gb1 = gw1 + hidden_ * dim_;
  double* gw2 = gb1 + hidden_;
  double* gb2 = gw2 + classes_ * hidden_;

  std::vector<double> hidden(hidden_), p(classes_), dhidden(hidden_);
  double loss = 0.0;
  for (auto idx : batch) {
    const auto x = ds.row(idx);
    const std::size_t y = ds.labels[idx];
    forward(params, x, hidden, p);
    loss += softmax_xent(p, y);
    std::fill(dhidden.begin(), dhidden.end(), 0.0);
    for (std::size_t c = 0; c < classes_; ++c) {
      const double delta = p[c] - (c == y ? 1.0 : 0.0);
      const double* row = w2 + c * hidden_;
      double* grow = gw2 + c * hidden_;
      for (std::size_t h = 0; h < hidden_; ++h) {
        grow[h] += delta * hidden[h];
        dhidden[h] += row[h] * delta;
      }
      gb2[c] += delta;
    }
    for (std::size_t h = 0; h < hidden_; ++h) {
      const double da = dhidden[h] * (1.0 - hidden[h] * hidden[h]);
      double* grow = gw1 + h * dim_;
      for (std::size_t j = 0; j < dim_; ++j) grow[j] += da * x[j];
      gb1[h] += da;
    }
  }
  return loss;
}

// ---------------------------------------------------------------- free functions

std::unique_ptr<GradientOracle> make_oracle(const ModelSpec& spec, const Dataset& ds) {
  switch (spec.kind) {
    case ModelKind::kSynthetic:
      return std::make_unique<SyntheticNonConvex>(ds.dim, spec.nonconvex_amplitude);
    case ModelKind::kLogReg:
      return std::make_unique<LogisticRegression>(ds.dim, std::max<std::size_t>(ds.classes, 2));
    case ModelKind::kMlp:
      return std::make_unique<MlpOneHidden>(ds.dim, spec.mlp_hidden, std::max<std::size_t>(ds.classes, 2));
  }
  throw InvalidArgument("make_oracle: unknown model kind");
}

LossGrad full_gradient(const GradientOracle& oracle, std::span<const double> params, const Shard& shard,
                       const Dataset& ds) {
  if (shard.empty()) throw StateError("full_gradient: shard " + std::to_string(shard.owner) + " is empty");
  return oracle.value_and_grad(params, shard.indices, ds);
}

ParamVector finite_difference_grad(const GradientOracle& oracle, std::span<const double> params,
                                   std::span<const std::size_t> batch, const Dataset& ds, double h) {
  if (!(h > 0.0)) throw InvalidArgument("finite_difference_grad: step must be positive");
  ParamVector probe(params.begin(), params.end());
  ParamVector out(params.size());
  for (std::size_t k = 0; k < params.size(); ++k) {
    probe[k] = params[k] + h;
    const double up = oracle.value(probe, batch, ds);
    probe[k] = params[k] - h;
    const double down = oracle.value(probe, batch, ds);
    probe[k] = params[k];
    out[k] = (up - down) / (2.0 * h);
  }
  return out;
}

double max_relative_error(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw InvalidArgument("max_relative_error: length mismatch");
  double diff = 0.0, scale = 1e-12;
  for (std::size_t k = 0; k < a.size(); ++k) {
    diff = std::max(diff, std::abs(a[k] - b[k]));
    scale = std::max({scale, std::abs(a[k]), std::abs(b[k])});
  }
  return diff / scale;
}

}  // namespace decmom
