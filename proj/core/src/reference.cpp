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

#include "decmom/reference.hpp"

#include <algorithm>
#include <cmath>

#include "decmom/error.hpp"

namespace decmom::reference {

ReferenceState make_state(const ParamVector& x0) { return {x0, ParamVector(x0.size(), 0.0)}; }

void sgd_step(ReferenceState& s, std::span<const double> g, double eta) {
  for (std::size_t k = 0; k < s.x.size(); ++k) s.x[k] -= eta * g[k];
}

void hb_step(ReferenceState& s, std::span<const double> g, double beta, double eta) {
  for (std::size_t k = 0; k < s.x.size(); ++k) {
    s.u[k] = beta * s.u[k] + g[k];
    s.x[k] -= eta * s.u[k];
  }
}

void nesterov_step(ReferenceState& s, std::span<const double> g, double beta, double eta) {
  for (std::size_t k = 0; k < s.x.size(); ++k) {
    s.u[k] = beta * s.u[k] + g[k];
    const double direction = beta * s.u[k] + g[k];
    s.x[k] -= eta * direction;
  }
}

ParamVector hb_one_line(std::span<const double> x, std::span<const double> x_prev, std::span<const double> g,
                        double beta, double eta) {
  ParamVector out(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) out[k] = x[k] - eta * g[k] + beta * (x[k] - x_prev[k]);
  return out;
}

ParamVector nesterov_one_line(std::span<const double> x, std::span<const double> x_prev, std::span<const double> g,
                              std::span<const double> g_prev, double beta, double eta) {
  ParamVector out(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    out[k] = x[k] - eta * g[k] + beta * (x[k] - eta * g[k] - x_prev[k] + eta * g_prev[k]);
  }
  return out;
}

std::vector<ParamVector> mix(const SquareMatrix& w, const std::vector<ParamVector>& in) {
  std::vector<ParamVector> out(in.size(), ParamVector(in.front().size(), 0.0));
  for (std::size_t i = 0; i < in.size(); ++i) {
    for (std::size_t j = 0; j < in.size(); ++j) {
      for (std::size_t k = 0; k < in[j].size(); ++k) out[i][k] += w(i, j) * in[j][k];
    }
  }
  return out;
}

std::vector<GtWorker> gt_init(const ParamVector& x0, std::size_t workers, const GradientFn& grad) {
  std::vector<GtWorker> out;
  for (std::size_t i = 0; i < workers; ++i) {
    ParamVector g = grad(i, x0);
    out.push_back({x0, g, g});
  }
  return out;
}

void vanilla_gt_step(std::vector<GtWorker>& workers, const SquareMatrix& w, const GradientFn& grad, double eta) {
  const std::size_t n = workers.size();
  std::vector<ParamVector> descent(n);
  for (std::size_t j = 0; j < n; ++j) {
    descent[j] = workers[j].x;
    for (std::size_t k = 0; k < descent[j].size(); ++k) descent[j][k] -= eta * workers[j].y[k];
  }
  const auto x_new = mix(w, descent);
  std::vector<ParamVector> corrected(n);
  for (std::size_t j = 0; j < n; ++j) {
    const ParamVector g_new = grad(j, x_new[j]);
    corrected[j] = workers[j].y;
    for (std::size_t k = 0; k < g_new.size(); ++k) corrected[j][k] += g_new[k] - workers[j].g_prev[k];
    workers[j].g_prev = g_new;
  }
  const auto y_new = mix(w, corrected);
  for (std::size_t j = 0; j < n; ++j) {
    workers[j].x = x_new[j];
    workers[j].y = y_new[j];
  }
}

double momentum_identity_violation(std::span<const TracePoint> trajectory, double alpha, double beta, double eta) {
  if (!(beta < 1.0)) throw InvalidArgument("momentum_identity_violation: beta must be < 1");
  const double ratio = beta / (1.0 - beta);
  const double z_step = eta / (1.0 - beta);
  const double c_coef = (alpha - alpha * beta - 1.0) * eta;
  double worst = 0.0;
  for (std::size_t t = 0; t + 1 < trajectory.size(); ++t) {
    const auto& a = trajectory[t];
    const auto& b = trajectory[t + 1];
    for (std::size_t k = 0; k < a.x.size(); ++k) {
      const double c0 = a.x[k] - a.v[k];
      const double c1 = b.x[k] - b.v[k];
      const double z0 = a.x[k] + ratio * c0;
      const double z1 = b.x[k] + ratio * c1;
      worst = std::max(worst, std::abs(z1 - z0 + z_step * a.g[k]));
      worst = std::max(worst, std::abs(c1 - beta * c0 - c_coef * a.g[k]));
    }
  }
  return worst;
}

}  // namespace decmom::reference
