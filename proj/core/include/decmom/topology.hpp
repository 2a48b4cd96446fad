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

#ifndef DECMOM_TOPOLOGY_HPP
#define DECMOM_TOPOLOGY_HPP

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "decmom/rng.hpp"

namespace decmom {

/// Dense row-major n x n matrix of doubles.
class SquareMatrix {
 public:
  SquareMatrix() = default;
  explicit SquareMatrix(std::size_t n, double fill = 0.0) : n_(n), data_(n * n, fill) {}

  static SquareMatrix identity(std::size_t n);

  std::size_t size() const noexcept { return n_; }
  double& operator()(std::size_t i, std::size_t j) { return data_[i * n_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * n_ + j]; }
  const std::vector<double>& data() const noexcept { return data_; }

  friend bool operator==(const SquareMatrix&, const SquareMatrix&) = default;

 private:
  std::size_t n_ = 0;
  std::vector<double> data_;
};

/// Undirected simple graph as a symmetric boolean matrix without self-loops.
class Adjacency {
 public:
  explicit Adjacency(std::size_t n) : n_(n), edges_(n * n, 0) {}

  std::size_t size() const noexcept { return n_; }
  bool operator()(std::size_t i, std::size_t j) const { return edges_[i * n_ + j] != 0; }
  /// Sets a single directed entry. Use connect() for undirected edges.
  void set(std::size_t i, std::size_t j, bool on) { edges_[i * n_ + j] = on ? 1 : 0; }
  void connect(std::size_t i, std::size_t j) {
    set(i, j, true);
    set(j, i, true);
  }
  std::size_t degree(std::size_t i) const;
  bool is_symmetric() const;
  bool has_self_loops() const;
  /// Breadth-first reachability from node 0.
  bool is_connected() const;

  static Adjacency ring(std::size_t n);
  static Adjacency star(std::size_t n);
  static Adjacency complete(std::size_t n);
  /// Random spanning tree plus each remaining edge independently with `edge_prob`.
  static Adjacency random_connected(std::size_t n, double edge_prob, RngStream& rng);

 private:
  std::size_t n_;
  std::vector<std::uint8_t> edges_;
};

/// Reads a whitespace-separated 0/1 matrix, one row per line.
Adjacency read_adjacency(const std::filesystem::path& path);

/// Eigenvalues of a symmetric matrix sorted in descending order.
/// Householder tridiagonalization followed by implicit QL.
std::vector<double> symmetric_eigenvalues(const SquareMatrix& w);

/// rho = 1 - max(|lambda_2|, |lambda_n|)^2 with eigenvalues sorted descending.
/// Throws InvalidArgument for asymmetric input. n = 1 gives 1.
double spectral_gap(const SquareMatrix& w);

struct ValidationCheck {
  std::string name;
  bool passed = false;
  double max_violation = 0.0;
};

struct ValidationReport {
  std::vector<ValidationCheck> checks;
  bool passed() const;
  const ValidationCheck* find(const std::string& name) const;
  std::string summary() const;
};

inline constexpr double kStochasticTolerance = 1e-12;

/// Checks entries in [0,1], exact symmetry, row and column sums equal to 1.
ValidationReport validate(const SquareMatrix& w, double tolerance = kStochasticTolerance);

/// Validated symmetric doubly stochastic gossip matrix. Immutable.
class MixingMatrix {
 public:
  /// Throws InvalidArgument if `w` fails validation.
  explicit MixingMatrix(SquareMatrix w);

  std::size_t size() const noexcept { return w_.size(); }
  double operator()(std::size_t i, std::size_t j) const { return w_(i, j); }
  const SquareMatrix& weights() const noexcept { return w_; }
  double rho() const noexcept { return rho_; }
  const std::string& label() const noexcept { return label_; }

  MixingMatrix with_label(std::string label) const;

 private:
  SquareMatrix w_;
  double rho_;
  std::string label_;
};

MixingMatrix build_full_mesh(std::size_t n);
/// Throws InvalidArgument for asymmetric input or self-loops, TopologyError if disconnected.
MixingMatrix build_metropolis_hastings(const Adjacency& adjacency);
/// Metropolis-Hastings on the cycle graph; n >= 3.
MixingMatrix build_ring(std::size_t n);
/// Metropolis-Hastings on a star with hub 0; n >= 2.
MixingMatrix build_star(std::size_t n);
/// No communication. rho = 0.
MixingMatrix build_identity(std::size_t n);

/// Epoch-indexed sequence of mixing matrices over half-open ranges [begin, end).
class TopologySchedule {
 public:
  struct Entry {
    std::size_t begin;
    std::size_t end;
    std::shared_ptr<const MixingMatrix> matrix;
  };

  TopologySchedule() = default;
  /// Single matrix covering [0, epochs).
  TopologySchedule(std::shared_ptr<const MixingMatrix> matrix, std::size_t epochs);

  /// Appends [current end, until_epoch). Throws if until_epoch does not extend
  /// the schedule or the worker count differs from earlier entries.
  void append(std::size_t until_epoch, std::shared_ptr<const MixingMatrix> matrix);

  const MixingMatrix& lookup(std::size_t epoch) const;
  std::size_t end_epoch() const noexcept { return entries_.empty() ? 0 : entries_.back().end; }
  std::size_t workers() const;
  const std::vector<Entry>& entries() const noexcept { return entries_; }

 private:
  std::vector<Entry> entries_;
};

}  // namespace decmom

#endif  // DECMOM_TOPOLOGY_HPP
