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


#ifndef DECMOM_METRICS_CSV_HPP
#define DECMOM_METRICS_CSV_HPP

#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "decmom/metrics.hpp"

namespace decmom {

inline constexpr std::string_view kMetricsHeader =
    "epoch,train_loss,test_acc,grad_norm_avg,consensus_dist,tracker_err,heterogeneity,rho";

/// Same text as printf("%.17g"), independent of locale. Round-trips exactly.
std::string format_double(double v);

/// One CSV line without the newline. Absent metrics are empty fields.
std::string format_record(const MetricsRecord& rec);

void write_metrics_csv(std::ostream& out, std::span<const MetricsRecord> records);

/// Writes the header on construction and flushes after every row, so a run
/// that stops early still leaves a well-formed prefix on disk.
class MetricsCsvWriter {
 public:
  /// Writes to `out`, which must outlive the writer.
  explicit MetricsCsvWriter(std::ostream& out);
  /// Opens (truncates) `path`. Throws IoError.
  explicit MetricsCsvWriter(const std::filesystem::path& path);

  void write(const MetricsRecord& rec);

 private:
  std::ofstream file_;
  std::ostream* out_;
};

/// Throws InvalidArgument if the header is not the metrics schema and IoError
/// on malformed or truncated content (including a missing final newline).
std::vector<MetricsRecord> read_metrics_csv(std::istream& in);
std::vector<MetricsRecord> read_metrics_csv(const std::filesystem::path& path);

struct MetricDelta {
  std::string metric;
  std::optional<double> a;
  std::optional<double> b;
  /// b - a when both are present.
  std::optional<double> delta;
};

/// "metric: a >= b" style check on final-epoch values.
struct OrderingAssertion {
  std::string metric;
  /// true: a >= b - tolerance; false: b >= a - tolerance.
  bool a_at_least_b = true;
  double tolerance = 0.0;
};

/// Parses "test_acc:a>=b" or "test_acc:b>=a". Throws InvalidArgument.
OrderingAssertion parse_ordering(std::string_view text);

struct CompareReport {
  std::size_t epochs_a = 0;
  std::size_t epochs_b = 0;
  /// One entry per metric column, in schema order.
  std::vector<MetricDelta> deltas;
  std::optional<OrderingAssertion> assertion;
  /// Set when an assertion was given; false if a compared value is absent.
  std::optional<bool> passed;

  std::string to_string() const;
};

CompareReport compare_records(std::span<const MetricsRecord> a, std::span<const MetricsRecord> b,
                              const std::optional<OrderingAssertion>& assertion = std::nullopt);

/// Reads both files and compares their final rows.
CompareReport compare_runs(const std::filesystem::path& csv_a, const std::filesystem::path& csv_b,
                           const std::optional<OrderingAssertion>& assertion = std::nullopt);

}  // namespace decmom

#endif  // DECMOM_METRICS_CSV_HPP
