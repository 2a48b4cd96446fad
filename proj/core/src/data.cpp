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

#include "decmom/data.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "decmom/error.hpp"

namespace decmom {

void Dataset::check() const {
  if (labels.empty()) throw InvalidArgument("dataset '" + name + "' is empty");
  if (dim == 0) throw InvalidArgument("dataset '" + name + "' has zero feature dimension");
  if (features.size() != labels.size() * dim) {
    throw InvalidArgument("dataset '" + name + "' feature storage does not match m x dim");
  }
  for (auto l : labels) {
    if (l >= classes) throw InvalidArgument("dataset '" + name + "' has a label >= classes");
  }
}

namespace {

void shuffle(std::vector<std::size_t>& v, RngStream& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.uniform_index(i));
    std::swap(v[i - 1], v[j]);
  }
}

// Splits `total` items according to `proportions` (summing to ~1) with
// largest-remainder rounding; ties go to the lower index.
std::vector<std::size_t> apportion(std::span<const double> proportions, std::size_t total) {
  const std::size_t n = proportions.size();
  std::vector<std::size_t> counts(n);
  std::vector<double> frac(n);
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double quota = proportions[i] * static_cast<double>(total);
    const double fl = std::floor(quota);
    counts[i] = static_cast<std::size_t>(fl);
    frac[i] = quota - fl;
    assigned += counts[i];
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return frac[a] > frac[b]; });
  for (std::size_t k = 0; assigned < total; k = (k + 1) % n) {
    ++counts[order[k]];
    ++assigned;
  }
  // Rounding in the proportions can overshoot by a unit; trim from the smallest remainders.
  for (std::size_t k = n; assigned > total;) {
    k = (k == 0 ? n : k) - 1;
    if (counts[order[k]] > 0) {
      --counts[order[k]];
      --assigned;
    }
  }
  return counts;
}

}  // namespace

std::vector<Shard> dirichlet_partition(const Dataset& ds, std::size_t workers, double concentration,
                                       RngStream& rng) {
  if (workers == 0) throw InvalidArgument("dirichlet_partition: need at least one worker");
  if (!(concentration > 0.0) || !std::isfinite(concentration)) {
    throw InvalidArgument("dirichlet_partition: concentration must be positive and finite");
  }
  const std::size_t m = ds.size();
  if (workers > m) {
    throw InvalidArgument("dirichlet_partition: " + std::to_string(workers) + " workers but only " +
                          std::to_string(m) + " samples");
  }

  std::vector<Shard> shards(workers);
  for (std::size_t i = 0; i < workers; ++i) shards[i].owner = i;

  std::vector<std::vector<std::size_t>> by_class(ds.classes);
  for (std::size_t k = 0; k < m; ++k) by_class[ds.labels[k]].push_back(k);

  std::vector<double> proportions(workers);
  for (auto& members : by_class) {
    // Draw order is class-major, worker-minor, independent of class size.
    double sum = 0.0;
    for (std::size_t i = 0; i < workers; ++i) {
      proportions[i] = rng.gamma(concentration);
      sum += proportions[i];
    }
    if (!(sum > 0.0)) {
      std::fill(proportions.begin(), proportions.end(), 1.0 / static_cast<double>(workers));
    } else {
      for (auto& p : proportions) p /= sum;
    }
    shuffle(members, rng);
    const auto counts = apportion(proportions, members.size());
    std::size_t pos = 0;
    for (std::size_t i = 0; i < workers; ++i) {
      shards[i].indices.insert(shards[i].indices.end(), members.begin() + static_cast<std::ptrdiff_t>(pos),
                               members.begin() + static_cast<std::ptrdiff_t>(pos + counts[i]));
      pos += counts[i];
    }
  }

  for (auto& s : shards) std::sort(s.indices.begin(), s.indices.end());

  // Empty-shard repair: hand each empty shard the highest index of the largest shard.
  for (auto& s : shards) {
    if (!s.empty()) continue;
    auto largest = std::max_element(shards.begin(), shards.end(),
                                    [](const Shard& a, const Shard& b) { return a.size() < b.size(); });
    s.indices.push_back(largest->indices.back());
    largest->indices.pop_back();
  }
  return shards;
}

bool is_disjoint_cover(std::span<const Shard> shards, std::size_t dataset_size) {
  std::vector<std::uint8_t> seen(dataset_size, 0);
  std::size_t total = 0;
  for (const auto& s : shards) {
    if (s.empty()) return false;
    for (auto idx : s.indices) {
      if (idx >= dataset_size || seen[idx]) return false;
      seen[idx] = 1;
      ++total;
    }
  }
  return total == dataset_size;
}

std::vector<std::size_t> sample_minibatch(const Shard& shard, std::size_t batch, RngStream& rng) {
  if (shard.empty()) throw StateError("sample_minibatch: shard " + std::to_string(shard.owner) + " is empty");
  if (batch == 0) throw InvalidArgument("sample_minibatch: batch must be positive");
  std::vector<std::size_t> out(batch);
  for (auto& idx : out) idx = shard.indices[rng.uniform_index(shard.size())];
  return out;
}

Dataset make_synthetic_blobs(const SyntheticSpec& spec, std::uint64_t seed) {
  if (spec.classes == 0 || spec.dim == 0 || spec.samples == 0) {
    throw InvalidArgument("make_synthetic_blobs: classes, dim and samples must be positive");
  }
  if (!(spec.blob_stddev >= 0.0)) throw InvalidArgument("make_synthetic_blobs: blob_stddev must be >= 0");
  RngStream rng({seed, 0, 0, StreamPurpose::kDataGen});
  Dataset ds;
  ds.name = "synthetic_blobs";
  ds.dim = spec.dim;
  ds.classes = spec.classes;
  std::vector<double> centres(spec.classes * spec.dim);
  for (auto& c : centres) c = rng.normal();
  ds.features.resize(spec.samples * spec.dim);
  ds.labels.resize(spec.samples);
  for (std::size_t k = 0; k < spec.samples; ++k) {
    const std::size_t label = k % spec.classes;
    ds.labels[k] = static_cast<std::uint32_t>(label);
    for (std::size_t j = 0; j < spec.dim; ++j) {
      ds.features[k * spec.dim + j] = centres[label * spec.dim + j] + spec.blob_stddev * rng.normal();
    }
  }
  return ds;
}

namespace {

std::uint32_t read_be32(std::istream& in, const std::string& what) {
  std::array<unsigned char, 4> b{};
  if (!in.read(reinterpret_cast<char*>(b.data()), 4)) throw IoError("truncated IDX header in " + what);
  return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) | (std::uint32_t{b[2]} << 8) |
         std::uint32_t{b[3]};
}

}  // namespace

Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels,
                 std::size_t max_samples) {
  std::ifstream img(images, std::ios::binary);
  if (!img) throw IoError("cannot open IDX image file '" + images.string() + "'");
  std::ifstream lab(labels, std::ios::binary);
  if (!lab) throw IoError("cannot open IDX label file '" + labels.string() + "'");

  const auto img_magic = read_be32(img, images.string());
  if (img_magic != 0x00000803) throw IoError("bad IDX image magic in '" + images.string() + "'");
  const std::size_t count = read_be32(img, images.string());
  const std::size_t rows = read_be32(img, images.string());
  const std::size_t cols = read_be32(img, images.string());

  const auto lab_magic = read_be32(lab, labels.string());
  if (lab_magic != 0x00000801) throw IoError("bad IDX label magic in '" + labels.string() + "'");
  const std::size_t label_count = read_be32(lab, labels.string());
  if (label_count != count) {
    throw IoError("IDX image count " + std::to_string(count) + " != label count " + std::to_string(label_count));
  }

  const std::size_t m = max_samples == 0 ? count : std::min(count, max_samples);
  Dataset ds;
  ds.name = images.filename().string();
  ds.dim = rows * cols;
  ds.features.resize(m * ds.dim);
  ds.labels.resize(m);

  std::vector<unsigned char> buf(ds.dim);
  for (std::size_t k = 0; k < m; ++k) {
    if (!img.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()))) {
      throw IoError("IDX image file truncated at sample " + std::to_string(k));
    }
    for (std::size_t j = 0; j < ds.dim; ++j) ds.features[k * ds.dim + j] = buf[j] / 255.0;
  }
  std::uint32_t max_label = 0;
  for (std::size_t k = 0; k < m; ++k) {
    const int c = lab.get();
    if (c == std::char_traits<char>::eof()) {
      throw IoError("IDX label file truncated at sample " + std::to_string(k));
    }
    ds.labels[k] = static_cast<std::uint32_t>(c);
    max_label = std::max(max_label, ds.labels[k]);
  }
  ds.classes = max_label + 1;
  ds.check();
  return ds;
}

Dataset load_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open CSV file '" + path.string() + "'");
  Dataset ds;
  ds.name = path.filename().string();
  std::string line;
  std::size_t line_no = 0;
  std::uint32_t max_label = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line_no == 1 && line.rfind("label", 0) == 0) continue;

    std::size_t fields = 0;
    std::size_t start = 0;
    while (start <= line.size()) {
      const std::size_t end = std::min(line.find(',', start), line.size());
      const char* first = line.data() + start;
      const char* last = line.data() + end;
      while (first < last && *first == ' ') ++first;
      while (last > first && last[-1] == ' ') --last;
      if (fields == 0) {
        std::uint32_t label = 0;
        auto [p, ec] = std::from_chars(first, last, label);
        if (ec != std::errc() || p != last) throw IoError("bad label in '" + path.string() + "'", line_no);
        ds.labels.push_back(label);
        max_label = std::max(max_label, label);
      } else {
        double v = 0.0;
        auto [p, ec] = std::from_chars(first, last, v);
        if (ec != std::errc() || p != last || !std::isfinite(v)) {
          throw IoError("bad feature value in '" + path.string() + "'", line_no);
        }
        ds.features.push_back(v);
      }
      ++fields;
      start = end + 1;
    }
    if (fields < 2) throw IoError("row has no features in '" + path.string() + "'", line_no);
    if (ds.dim == 0) ds.dim = fields - 1;
    if (fields - 1 != ds.dim) throw IoError("inconsistent feature count in '" + path.string() + "'", line_no);
  }
  if (ds.labels.empty()) throw IoError("no samples in '" + path.string() + "'");
  ds.classes = max_label + 1;
  ds.check();
  return ds;
}

Dataset load_dataset(const std::filesystem::path& path, DataFormat format,
                     const std::filesystem::path& labels_path, std::size_t max_samples) {
  switch (format) {
    case DataFormat::kIdx:
      if (labels_path.empty()) throw InvalidArgument("load_dataset: IDX needs a label file");
      return load_idx(path, labels_path, max_samples);
    case DataFormat::kCsv: {
      auto ds = load_csv(path);
      if (max_samples != 0 && max_samples < ds.size()) {
        std::vector<std::size_t> first(max_samples);
        std::iota(first.begin(), first.end(), 0);
        ds = subset(ds, first, ds.name);
      }
      return ds;
    }
  }
  throw InvalidArgument("load_dataset: unknown format");
}

Dataset subset(const Dataset& ds, std::span<const std::size_t> indices, std::string name) {
  Dataset out;
  out.name = std::move(name);
  out.dim = ds.dim;
  out.classes = ds.classes;
  out.features.reserve(indices.size() * ds.dim);
  out.labels.reserve(indices.size());
  for (auto idx : indices) {
    if (idx >= ds.size()) throw InvalidArgument("subset: index out of range");
    const auto r = ds.row(idx);
    out.features.insert(out.features.end(), r.begin(), r.end());
    out.labels.push_back(ds.labels[idx]);
  }
  return out;
}

std::pair<Dataset, Dataset> split_train_test(const Dataset& ds, double test_fraction, RngStream& rng) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw InvalidArgument("split_train_test: test_fraction must be in (0, 1)");
  }
  const std::size_t m = ds.size();
  const auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(m)));
  if (n_test == 0 || n_test >= m) throw InvalidArgument("split_train_test: split leaves an empty side");
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  shuffle(order, rng);
  std::span<const std::size_t> all(order);
  return {subset(ds, all.first(m - n_test), ds.name + ":train"), subset(ds, all.last(n_test), ds.name + ":test")};
}

}  // namespace decmom
