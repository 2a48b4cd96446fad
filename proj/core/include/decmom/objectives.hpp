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

#ifndef DECMOM_OBJECTIVES_HPP
#define DECMOM_OBJECTIVES_HPP

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "decmom/data.hpp"

namespace decmom {

/// Flat model parameters. Each model documents its own layout.
using ParamVector = std::vector<double>;

struct LossGrad {
  double loss = 0.0;
  ParamVector grad;
};

/// Per-sample loss F(x, xi) and its gradient over a flat parameter vector.
///
/// Implementations only provide the per-batch accumulation; the public entry
/// points validate arguments and normalise by the batch size. Samples are
/// visited in batch order, so results are bit-reproducible.
class GradientOracle {
 public:
  virtual ~GradientOracle() = default;

  virtual std::size_t param_dim() const = 0;
  virtual std::string name() const = 0;

  /// Mean loss over `batch` and its gradient.
  LossGrad value_and_grad(std::span<const double> params, std::span<const std::size_t> batch,
                          const Dataset& ds) const;
  /// Mean loss only.
  double value(std::span<const double> params, std::span<const std::size_t> batch, const Dataset& ds) const;

  /// Whether predict() is meaningful.
  virtual bool is_classifier() const { return false; }
  /// Arg-max class for sample `idx`, ties to the lowest class. Throws StateError
  /// for non-classifiers.
  virtual std::size_t predict(std::span<const double> params, const Dataset& ds, std::size_t idx) const;

  /// Initial parameters x_0; identical for every caller with the same seed.
  virtual ParamVector initial_params(std::uint64_t seed) const = 0;

 protected:
  /// Adds the per-sample losses into the return value and the per-sample
  /// gradients into `grad_sum` (pre-zeroed, length param_dim()).
  virtual double accumulate(std::span<const double> params, std::span<const std::size_t> batch,
                            const Dataset& ds, std::span<double> grad_sum) const = 0;
  virtual double accumulate_loss(std::span<const double> params, std::span<const std::size_t> batch,
                                 const Dataset& ds) const;

 private:
  void check_args(std::span<const double> params, std::span<const std::size_t> batch, const Dataset& ds) const;
};

/// f(x; c) = sum_k (x_k - c_k)^2 + a_k sin^2(x_k - c_k), where c is the sample's
/// feature row. Non-convex whenever some a_k > 1. Parameter layout: x (dim).
class SyntheticNonConvex final : public GradientOracle {
 public:
  SyntheticNonConvex(std::size_t dim, std::vector<double> amplitudes);
  SyntheticNonConvex(std::size_t dim, double amplitude)
      : SyntheticNonConvex(dim, std::vector<double>(dim, amplitude)) {}

  std::size_t param_dim() const override { return dim_; }
  std::string name() const override { return "synthetic"; }
  ParamVector initial_params(std::uint64_t seed) const override;
  const std::vector<double>& amplitudes() const noexcept { return amp_; }

 protected:
  double accumulate(std::span<const double> params, std::span<const std::size_t> batch, const Dataset& ds,
                    std::span<double> grad_sum) const override;

 private:
  std::size_t dim_;
  std::vector<double> amp_;
};

/// Multinomial logistic regression with softmax cross-entropy.
/// Layout: weights (classes x dim, row-major), then biases (classes).
class LogisticRegression final : public GradientOracle {
 public:
  LogisticRegression(std::size_t dim, std::size_t classes);

  std::size_t param_dim() const override { return classes_ * (dim_ + 1); }
  std::string name() const override { return "logreg"; }
  bool is_classifier() const override { return true; }
  std::size_t predict(std::span<const double> params, const Dataset& ds, std::size_t idx) const override;
  /// All zeros.
  ParamVector initial_params(std::uint64_t seed) const override;

 protected:
  double accumulate(std::span<const double> params, std::span<const std::size_t> batch, const Dataset& ds,
                    std::span<double> grad_sum) const override;

 private:
  void logits(std::span<const double> params, std::span<const double> x, std::span<double> out) const;
  std::size_t dim_;
  std::size_t classes_;
};

/// One tanh hidden layer, softmax cross-entropy output, hand-written backprop.
/// Layout: W1 (hidden x dim), b1 (hidden), W2 (classes x hidden), b2 (classes).
class MlpOneHidden final : public GradientOracle {
 public:
  MlpOneHidden(std::size_t dim, std::size_t hidden, std::size_t classes);

  std::size_t param_dim() const override { return hidden_ * dim_ + hidden_ + classes_ * hidden_ + classes_; }
  std::string name() const override { return "mlp"; }
  bool is_classifier() const override { return true; }
  std::size_t predict(std::span<const double> params, const Dataset& ds, std::size_t idx) const override;
  /// Glorot-uniform weights, zero biases.
  ParamVector initial_params(std::uint64_t seed) const override;

 protected:
  double accumulate(std::span<const double> params, std::span<const std::size_t> batch, const Dataset& ds,
                    std::span<double> grad_sum) const override;

 private:
  // Fills hidden activations and output logits for one sample.
  void forward(std::span<const double> params, std::span<const double> x, std::span<double> hidden,
               std::span<double> logits) const;
  std::size_t dim_;
  std::size_t hidden_;
  std::size_t classes_;
};

enum class ModelKind { kSynthetic, kLogReg, kMlp };

struct ModelSpec {
  ModelKind kind = ModelKind::kSynthetic;
  std::size_t mlp_hidden = 32;
  double nonconvex_amplitude = 1.5;
};

std::unique_ptr<GradientOracle> make_oracle(const ModelSpec& spec, const Dataset& ds);

/// Exact gradient of f_i: value_and_grad over the whole shard in index order.
/// Throws StateError on an empty shard.
LossGrad full_gradient(const GradientOracle& oracle, std::span<const double> params, const Shard& shard,
                       const Dataset& ds);

/// Central differences (f(x + h e_k) - f(x - h e_k)) / 2h per coordinate.
ParamVector finite_difference_grad(const GradientOracle& oracle, std::span<const double> params,
                                   std::span<const std::size_t> batch, const Dataset& ds, double h);

/// max_k |a_k - b_k| / max(max_k |a_k|, max_k |b_k|, 1e-12).
double max_relative_error(std::span<const double> a, std::span<const double> b);

}  // namespace decmom

#endif  // DECMOM_OBJECTIVES_HPP
