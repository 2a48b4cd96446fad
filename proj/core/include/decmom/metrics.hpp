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

#ifndef DECMOM_METRICS_HPP
#define DECMOM_METRICS_HPP

#include <cstddef>
#include <optional>

namespace decmom {

/// One row of per-epoch diagnostics. `epoch` counts completed epochs (1-based).
struct MetricsRecord {
  std::size_t epoch = 0;
  /// Mean over workers of f_i(x_i).
  double train_loss = 0.0;
  /// Accuracy of the averaged model on the test set; absent for non-classifiers.
  std::optional<double> test_acc;
  /// ||grad f(x_bar)||.
  double grad_norm_avg = 0.0;
  /// (1/n) sum_i ||x_i - x_bar||^2.
  double consensus_dist = 0.0;
  /// max_i ||y_i - (1/n) sum_j grad f_j(x_i)||; GT only, and only on diagnostics epochs.
  std::optional<double> tracker_err;
  /// (1/n) sum_i ||grad f_i(x_bar) - grad f(x_bar)||^2.
  std::optional<double> heterogeneity;
  /// Spectral gap of the matrix used in this epoch.
  double rho = 0.0;
};

}  // namespace decmom

#endif  // DECMOM_METRICS_HPP
