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

#ifndef DECMOM_CONFIG_HPP
#define DECMOM_CONFIG_HPP

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "decmom/data.hpp"
#include "decmom/objectives.hpp"
#include "decmom/optim.hpp"

namespace decmom {

// ---------------------------------------------------------------- raw document

struct ConfigValue;
using ConfigTable = std::map<std::string, ConfigValue>;

/// A scalar, or an array of inline tables (the only array form the run config uses).
struct ConfigValue {
  std::variant<std::int64_t, double, bool, std::string, std::vector<ConfigTable>> value;
  std::size_t line = 0;
};

/// Parses the TOML subset used for run configs: `[section]` headers, `key = value`
/// with strings, integers, floats, booleans, inline tables and arrays of inline
/// tables, `#` comments. Inline tables are flattened into dotted keys, so the
/// result maps e.g. "data.synthetic.classes" to its value.
ConfigTable parse_config_document(std::string_view text);

/// Parses a single value as it would appear after `=`. Falls back to a bare
/// string for unquoted words, which keeps `--set topology=ring` convenient.
ConfigValue parse_override_value(std::string_view text);

// ---------------------------------------------------------------- typed config

struct ScheduleEntry {
  std::size_t until_epoch = 0;
  std::string topology;
};

struct DataConfig {
  /// "synthetic", "idx" or "csv".
  std::string source = "synthetic";
  std::filesystem::path path;
  std::filesystem::path labels_path;
  std::size_t max_samples = 0;
  SyntheticSpec synthetic;
  /// Dirichlet concentration of the label-skewed partition.
  double dirichlet = 1.0;
  std::size_t batch_size = 32;
  double test_fraction = 0.2;
  bool full_batch = false;
};

struct RunConfig {
  std::uint64_t seed = 0;
  std::size_t workers = 0;
  std::size_t epochs = 0;
  SumHyper hyper;
  ModelSpec model;
  /// "full_mesh", "ring", "custom", or empty when `schedule` (or the default schedule) applies.
  std::string topology;
  std::filesystem::path custom_adjacency;
  std::vector<ScheduleEntry> schedule;
  DataConfig data;
  std::size_t diag_every = 1;
  bool diag_sigma = false;
  std::size_t threads = 1;
  std::filesystem::path out;
};

/// Learning rate shipped for a model when the config does not set `eta`.
double default_eta(ModelKind kind);

/// Every accepted key, dotted.
const std::vector<std::string>& known_config_keys();

/// Validates and converts a document. `base_dir` resolves relative paths.
/// Throws ConfigError naming the key (and line when known).
RunConfig config_from_document(const ConfigTable& doc, const std::filesystem::path& base_dir = {});

/// Reads, applies `key=value` overrides (in order), and validates.
RunConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides = {});

/// Same as load_config for in-memory text.
RunConfig load_config_text(std::string_view text, const std::vector<std::string>& overrides = {},
                           const std::filesystem::path& base_dir = {});

/// Applies one `key=value` override to a document.
void apply_override(ConfigTable& doc, std::string_view assignment);

/// The schedule actually used: explicit `schedule`, a static `topology`, or the
/// default (full mesh for the first half of the epochs, ring for the rest).
std::vector<ScheduleEntry> effective_schedule(const RunConfig& config);

}  // namespace decmom

#endif  // DECMOM_CONFIG_HPP
