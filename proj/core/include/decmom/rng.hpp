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

#ifndef DECMOM_RNG_HPP
#define DECMOM_RNG_HPP

#include <cstdint>
#include <random>

namespace decmom {

/// What a stream is used for. Part of the seed material so that streams with
/// the same (seed, worker, epoch) but different purposes never coincide.
enum class StreamPurpose : std::uint64_t {
  kBatch = 1,
  kInit = 2,
  kPartition = 3,
  kGtBootstrap = 4,
  kDataGen = 5,
  kSplit = 6,
  kSigma = 7,
  kTest = 99,
};

/// Identifies one stream. Equal seeds give equal draw sequences.
struct StreamSeed {
  std::uint64_t global_seed = 0;
  std::uint64_t worker = 0;
  std::uint64_t epoch = 0;
  StreamPurpose purpose = StreamPurpose::kBatch;

  /// splitmix64-chained hash of all four fields.
  std::uint64_t hash() const noexcept;
};

/// Seeded random stream.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the
/// standard. The distributions below are implemented here rather than taken
/// from <random>, whose distribution algorithms are implementation-defined;
/// this keeps draws identical across standard libraries.
class RngStream {
 public:
  explicit RngStream(const StreamSeed& seed);

  const StreamSeed& seed() const noexcept { return seed_; }
  /// Number of 64-bit words consumed so far.
  std::uint64_t counter() const noexcept { return counter_; }

  std::uint64_t next_u64();
  /// Uniform in [0, 1) with 53 random bits.
  double uniform01();
  /// Uniform integer in [0, n). Unbiased (rejection sampling). n must be > 0.
  std::uint64_t uniform_index(std::uint64_t n);
  /// Standard normal via the Marsaglia polar method.
  double normal();
  /// Gamma(shape, 1) via Marsaglia–Tsang; shape < 1 uses the U^(1/shape) boost.
  double gamma(double shape);

 private:
  StreamSeed seed_;
  std::mt19937_64 engine_;
  std::uint64_t counter_ = 0;
  bool has_spare_normal_ = false;
  double spare_normal_ = 0.0;
};

std::uint64_t splitmix64(std::uint64_t x) noexcept;

}  // namespace decmom

#endif  // DECMOM_RNG_HPP
