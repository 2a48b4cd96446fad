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

#ifndef DECMOM_DATA_HPP
#define DECMOM_DATA_HPP

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "decmom/rng.hpp"

namespace decmom {

/// Labelled samples with a fixed feature dimension. Features are stored row-major.
struct Dataset {
  std::string name;
  std::size_t dim = 0;
  std::size_t classes = 0;
  std::vector<double> features;
  std::vector<std::uint32_t> labels;

  std::size_t size() const noexcept { return labels.size(); }
  std::span<const double> row(std::size_t i) const { return {features.data() + i * dim, dim}; }

  /// Throws InvalidArgument if any invariant is broken.
  void check() const;
};

/// A worker's slice of a dataset: indices into the parent, unique within the shard.
struct Shard {
  std::size_t owner = 0;
  std::vector<std::size_t> indices;

  std::size_t size() const noexcept { return indices.size(); }
  bool empty() const noexcept { return indices.empty(); }
};

/// Label-skewed split across `workers` shards.
///
/// For every class (ascending) the per-worker proportions are drawn from a
/// symmetric Dirichlet(concentration) through per-worker Gamma draws, the
/// class samples are shuffled and dealt out using largest-remainder rounding.
/// Afterwards every empty shard receives one sample taken from the currently
/// largest shard. Shard indices are returned sorted.
std::vector<Shard> dirichlet_partition(const Dataset& ds, std::size_t workers, double concentration,
                                       RngStream& rng);

/// Every sample index belongs to exactly one shard and no shard is empty.
bool is_disjoint_cover(std::span<const Shard> shards, std::size_t dataset_size);

/// `batch` indices drawn uniformly with replacement from the shard.
std::vector<std::size_t> sample_minibatch(const Shard& shard, std::size_t batch, RngStream& rng);

struct SyntheticSpec {
  std::size_t classes = 4;
  std::size_t dim = 16;
  std::size_t samples = 2000;
  double blob_stddev = 1.0;
};

/// Gaussian blobs: class centres ~ N(0, I), samples = centre + blob_stddev * N(0, I).
/// Sample k has label k mod classes.
Dataset make_synthetic_blobs(const SyntheticSpec& spec, std::uint64_t seed);

enum class DataFormat { kIdx, kCsv };

/// IDX (MNIST family): an image file (magic 0x00000803) paired with a label file
/// (magic 0x00000801). Pixels are scaled to [0, 1]. `max_samples` = 0 keeps all.
Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels,
                 std::size_t max_samples = 0);

/// CSV rows `label,feat0,feat1,...`; an optional first line starting with "label" is skipped.
Dataset load_csv(const std::filesystem::path& path);

/// For kIdx, `labels_path` must name the label file; it is ignored for kCsv.
Dataset load_dataset(const std::filesystem::path& path, DataFormat format,
                     const std::filesystem::path& labels_path = {}, std::size_t max_samples = 0);

Dataset subset(const Dataset& ds, std::span<const std::size_t> indices, std::string name);

/// Seeded shuffle, then the last round(test_fraction * m) samples become the test set.
std::pair<Dataset, Dataset> split_train_test(const Dataset& ds, double test_fraction, RngStream& rng);

}  // namespace decmom

#endif  // DECMOM_DATA_HPP
