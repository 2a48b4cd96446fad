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

#include "decmom/topology.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <functional>
#include <limits>
#include <numeric>
#include <sstream>

#include "decmom/error.hpp"

namespace decmom {

SquareMatrix SquareMatrix::identity(std::size_t n) {
  SquareMatrix m(n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

// ---------------------------------------------------------------- Adjacency

std::size_t Adjacency::degree(std::size_t i) const {
  std::size_t deg = 0;
  for (std::size_t j = 0; j < n_; ++j) {
    if (j != i && (*this)(i, j)) ++deg;
  }
  return deg;
}

bool Adjacency::is_symmetric() const {
  for (std::size_t i = 0; i < n_; ++i) {
    for (std::size_t j = i + 1; j < n_; ++j) {
      if ((*this)(i, j) != (*this)(j, i)) return false;
    }
  }
  return true;
}

bool Adjacency::has_self_loops() const {
  for (std::size_t i = 0; i < n_; ++i) {
    if ((*this)(i, i)) return true;
  }
  return false;
}

bool Adjacency::is_connected() const {
  if (n_ == 0) return false;
  std::vector<bool> seen(n_, false);
  std::deque<std::size_t> queue{0};
  seen[0] = true;
  std::size_t reached = 1;
  while (!queue.empty()) {
    const std::size_t i = queue.front();
    queue.pop_front();
    for (std::size_t j = 0; j < n_; ++j) {
      if (!seen[j] && (*this)(i, j)) {
        seen[j] = true;
        ++reached;
        queue.push_back(j);
      }
    }
  }
  return reached == n_;
}

Adjacency Adjacency::ring(std::size_t n) {
  Adjacency a(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = (i + 1) % n;
    if (i != j) a.connect(i, j);
  }
  return a;
}

Adjacency Adjacency::star(std::size_t n) {
  Adjacency a(n);
  for (std::size_t i = 1; i < n; ++i) a.connect(0, i);
  return a;
}

Adjacency Adjacency::complete(std::size_t n) {
  Adjacency a(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) a.connect(i, j);
  }
  return a;
}

Adjacency Adjacency::random_connected(std::size_t n, double edge_prob, RngStream& rng) {
  Adjacency a(n);
  // Random labelled tree: attach node k to a uniformly chosen earlier node.
  for (std::size_t k = 1; k < n; ++k) {
    a.connect(k, static_cast<std::size_t>(rng.uniform_index(k)));
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const bool extra = rng.uniform01() < edge_prob;
      if (extra) a.connect(i, j);
    }
  }
  return a;
}

Adjacency read_adjacency(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open adjacency file '" + path.string() + "'");
  std::vector<std::vector<int>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::vector<int> row;
    std::string tok;
    while (ls >> tok) {
      if (tok != "0" && tok != "1") {
        throw IoError("adjacency entries must be 0 or 1, got '" + tok + "'", line_no);
      }
      row.push_back(tok == "1" ? 1 : 0);
    }
    if (row.empty()) continue;
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw IoError("ragged adjacency row", line_no);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw IoError("empty adjacency file '" + path.string() + "'");
  if (rows.size() != rows.front().size()) {
    throw IoError("adjacency matrix is not square", line_no);
  }
  Adjacency a(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows.size(); ++j) a.set(i, j, rows[i][j] != 0);
  }
  return a;
}

// ---------------------------------------------------------------- eigensolver

namespace {

bool exactly_symmetric(const SquareMatrix& w) {
  const std::size_t n = w.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (w(i, j) != w(j, i)) return false;
    }
  }
  return true;
}

// Householder reduction of a symmetric matrix to tridiagonal form. On return
// `diag` holds the diagonal and `off[i]` the (i, i-1) subdiagonal, off[0] = 0.
void tridiagonalize(SquareMatrix a, std::vector<double>& diag, std::vector<double>& off) {
  const std::size_t n = a.size();
  diag.assign(n, 0.0);
  off.assign(n, 0.0);
  for (std::size_t i = n - 1; i >= 1; --i) {
    const std::size_t l = i - 1;
    if (l > 0) {
      double h = 0.0;
      double scale = 0.0;
      for (std::size_t k = 0; k <= l; ++k) scale += std::abs(a(i, k));
      if (scale == 0.0) {
        off[i] = a(i, l);
      } else {
        for (std::size_t k = 0; k <= l; ++k) {
          a(i, k) /= scale;
          h += a(i, k) * a(i, k);
        }
        double f = a(i, l);
        double g = f >= 0.0 ? -std::sqrt(h) : std::sqrt(h);
        off[i] = scale * g;
        h -= f * g;
        a(i, l) = f - g;
        f = 0.0;
        for (std::size_t j = 0; j <= l; ++j) {
          g = 0.0;
          for (std::size_t k = 0; k <= j; ++k) g += a(j, k) * a(i, k);
          for (std::size_t k = j + 1; k <= l; ++k) g += a(k, j) * a(i, k);
          off[j] = g / h;
          f += off[j] * a(i, j);
        }
        const double hh = f / (h + h);
        for (std::size_t j = 0; j <= l; ++j) {
          f = a(i, j);
          g = off[j] - hh * f;
          off[j] = g;
          for (std::size_t k = 0; k <= j; ++k) a(j, k) -= f * off[k] + g * a(i, k);
        }
      }
    } else {
      off[i] = a(i, l);
    }
  }
  off[0] = 0.0;
  for (std::size_t i = 0; i < n; ++i) diag[i] = a(i, i);
}

// Implicit QL with Wilkinson-style shifts on a symmetric tridiagonal matrix.
void tridiagonal_ql(std::vector<double>& d, std::vector<double>& e) {
  const std::size_t n = d.size();
  if (n < 2) return;
  for (std::size_t i = 1; i < n; ++i) e[i - 1] = e[i];
  e[n - 1] = 0.0;
  constexpr double eps = std::numeric_limits<double>::epsilon();
  for (std::size_t l = 0; l < n; ++l) {
    int iterations = 0;
    std::size_t m;
    do {
      for (m = l; m + 1 < n; ++m) {
        const double dd = std::abs(d[m]) + std::abs(d[m + 1]);
        if (std::abs(e[m]) <= eps * dd) break;
      }
      if (m == l) break;
      if (++iterations > 100) throw std::runtime_error("tridiagonal QL failed to converge");
      double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
      double r = std::hypot(g, 1.0);
      g = d[m] - d[l] + e[l] / (g + std::copysign(r, g));
      double s = 1.0, c = 1.0, p = 0.0;
      bool underflow = false;
      for (std::size_t i = m; i-- > l;) {
        const double f = s * e[i];
        const double b = c * e[i];
        r = std::hypot(f, g);
        e[i + 1] = r;
        if (r == 0.0) {
          d[i + 1] -= p;
          e[m] = 0.0;
          underflow = true;
          break;
        }
        s = f / r;
        c = g / r;
        g = d[i + 1] - p;
        r = (d[i] - g) * s + 2.0 * c * b;
        p = s * r;
        d[i + 1] = g + p;
        g = c * r - b;
      }
      if (underflow) continue;
      d[l] -= p;
      e[l] = g;
      e[m] = 0.0;
    } while (m != l);
  }
}

}  // namespace

std::vector<double> symmetric_eigenvalues(const SquareMatrix& w) {
  if (!exactly_symmetric(w)) throw InvalidArgument("symmetric_eigenvalues: matrix is not symmetric");
  const std::size_t n = w.size();
  if (n == 0) return {};
  if (n == 1) return {w(0, 0)};
  std::vector<double> diag, off;
  tridiagonalize(w, diag, off);
  tridiagonal_ql(diag, off);
  std::sort(diag.begin(), diag.end(), std::greater<>());
  return diag;
}

double spectral_gap(const SquareMatrix& w) {
  if (!exactly_symmetric(w)) throw InvalidArgument("spectral_gap: matrix is not symmetric");
  const std::size_t n = w.size();
  if (n == 0) throw InvalidArgument("spectral_gap: empty matrix");
  if (n == 1) return 1.0;
  const auto eig = symmetric_eigenvalues(w);
  const double worst = std::max(std::abs(eig[1]), std::abs(eig[n - 1]));
  return std::clamp(1.0 - worst * worst, 0.0, 1.0);
}

// ---------------------------------------------------------------- validation

bool ValidationReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.passed; });
}

const ValidationCheck* ValidationReport::find(const std::string& name) const {
  for (const auto& c : checks) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

std::string ValidationReport::summary() const {
  std::ostringstream os;
  for (const auto& c : checks) {
    os << c.name << '=' << (c.passed ? "ok" : "FAIL") << "(" << c.max_violation << ") ";
  }
  return os.str();
}

ValidationReport validate(const SquareMatrix& w, double tolerance) {
  const std::size_t n = w.size();
  double range = 0.0, symmetry = 0.0, rows = 0.0, cols = 0.0;
  bool finite = n > 0;
  for (std::size_t i = 0; i < n; ++i) {
    double row_sum = 0.0, col_sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double v = w(i, j);
      if (!std::isfinite(v)) finite = false;
      range = std::max({range, -v, v - 1.0});
      symmetry = std::max(symmetry, std::abs(v - w(j, i)));
      row_sum += v;
      col_sum += w(j, i);
    }
    rows = std::max(rows, std::abs(row_sum - 1.0));
    cols = std::max(cols, std::abs(col_sum - 1.0));
  }
  ValidationReport report;
  report.checks.push_back({"finite", finite, finite ? 0.0 : std::numeric_limits<double>::infinity()});
  report.checks.push_back({"entries_in_unit_interval", range <= 0.0, std::max(range, 0.0)});
  report.checks.push_back({"symmetric", symmetry == 0.0, symmetry});
  report.checks.push_back({"row_sums", rows <= tolerance, rows});
  report.checks.push_back({"column_sums", cols <= tolerance, cols});
  return report;
}

// ---------------------------------------------------------------- MixingMatrix

MixingMatrix::MixingMatrix(SquareMatrix w) : w_(std::move(w)), rho_(0.0) {
  const auto report = validate(w_);
  if (!report.passed()) {
    throw InvalidArgument("not a symmetric doubly stochastic matrix: " + report.summary());
  }
  rho_ = spectral_gap(w_);
}

MixingMatrix MixingMatrix::with_label(std::string label) const {
  MixingMatrix copy = *this;
  copy.label_ = std::move(label);
  return copy;
}

MixingMatrix build_full_mesh(std::size_t n) {
  if (n == 0) throw InvalidArgument("build_full_mesh: n must be positive");
  return MixingMatrix(SquareMatrix(n, 1.0 / static_cast<double>(n))).with_label("full_mesh");
}

MixingMatrix build_metropolis_hastings(const Adjacency& adjacency) {
  const std::size_t n = adjacency.size();
  if (n == 0) throw InvalidArgument("build_metropolis_hastings: empty graph");
  if (!adjacency.is_symmetric()) throw InvalidArgument("build_metropolis_hastings: adjacency is not symmetric");
  if (adjacency.has_self_loops()) throw InvalidArgument("build_metropolis_hastings: self-loops are not allowed");
  if (!adjacency.is_connected()) throw TopologyError("build_metropolis_hastings: graph is disconnected");

  std::vector<std::size_t> degree(n);
  for (std::size_t i = 0; i < n; ++i) degree[i] = adjacency.degree(i);

  SquareMatrix w(n);
  // Each unordered pair is computed once and mirrored, so W is bit-symmetric.
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (!adjacency(i, j)) continue;
      const double wij = std::min(1.0 / static_cast<double>(degree[i] + 1),
                                  1.0 / static_cast<double>(degree[j] + 1));
      w(i, j) = wij;
      w(j, i) = wij;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    double off = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) off += w(i, j);
    }
    w(i, i) = 1.0 - off;
  }
  return MixingMatrix(std::move(w)).with_label("metropolis_hastings");
}

MixingMatrix build_ring(std::size_t n) {
  if (n < 3) throw InvalidArgument("build_ring: n must be at least 3");
  return build_metropolis_hastings(Adjacency::ring(n)).with_label("ring");
}

MixingMatrix build_star(std::size_t n) {
  if (n < 2) throw InvalidArgument("build_star: n must be at least 2");
  return build_metropolis_hastings(Adjacency::star(n)).with_label("star");
}

MixingMatrix build_identity(std::size_t n) {
  if (n == 0) throw InvalidArgument("build_identity: n must be positive");
  return MixingMatrix(SquareMatrix::identity(n)).with_label("identity");
}

// ---------------------------------------------------------------- schedule

TopologySchedule::TopologySchedule(std::shared_ptr<const MixingMatrix> matrix, std::size_t epochs) {
  append(epochs, std::move(matrix));
}

void TopologySchedule::append(std::size_t until_epoch, std::shared_ptr<const MixingMatrix> matrix) {
  if (!matrix) throw InvalidArgument("TopologySchedule: null matrix");
  const std::size_t begin = end_epoch();
  if (until_epoch <= begin) {
    throw InvalidArgument("TopologySchedule: until_epoch " + std::to_string(until_epoch) +
                          " does not extend the schedule past epoch " + std::to_string(begin));
  }
  if (!entries_.empty() && matrix->size() != workers()) {
    throw InvalidArgument("TopologySchedule: all matrices must have the same worker count");
  }
  entries_.push_back({begin, until_epoch, std::move(matrix)});
}

const MixingMatrix& TopologySchedule::lookup(std::size_t epoch) const {
  for (const auto& e : entries_) {
    if (epoch >= e.begin && epoch < e.end) return *e.matrix;
  }
  throw InvalidArgument("TopologySchedule: epoch " + std::to_string(epoch) + " is outside [0, " +
                        std::to_string(end_epoch()) + ")");
}

std::size_t TopologySchedule::workers() const {
  if (entries_.empty()) throw StateError("TopologySchedule: empty schedule");
  return entries_.front().matrix->size();
}

}  // namespace decmom
