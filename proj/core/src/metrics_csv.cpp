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


#include "decmom/metrics_csv.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <sstream>

#include "decmom/error.hpp"

namespace decmom {

namespace {

constexpr std::array<std::string_view, 7> kMetricColumns{"train_loss",     "test_acc",      "grad_norm_avg",
                                                         "consensus_dist", "tracker_err",   "heterogeneity",
                                                         "rho"};

std::string optional_field(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

std::optional<double> parse_field(std::string_view field, std::size_t line) {
  if (field.empty()) return std::nullopt;
  double v = 0.0;
  auto [p, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || p != field.data() + field.size()) {
    throw IoError("malformed number '" + std::string(field) + "'", line);
  }
  return v;
}

std::optional<double> column(const MetricsRecord& r, std::size_t k) {
  switch (k) {
    case 0: return r.train_loss;
    case 1: return r.test_acc;
    case 2: return r.grad_norm_avg;
    case 3: return r.consensus_dist;
    case 4: return r.tracker_err;
    case 5: return r.heterogeneity;
    default: return r.rho;
  }
}

}  // namespace

std::string format_double(double v) {
  std::array<char, 64> buf{};
  auto [p, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::general, 17);
  if (ec != std::errc()) throw InvalidArgument("format_double: conversion failed");
  return std::string(buf.data(), p);
}

std::string format_record(const MetricsRecord& rec) {
  std::string line = std::to_string(rec.epoch);
  line += ',' + format_double(rec.train_loss);
  line += ',' + optional_field(rec.test_acc);
  line += ',' + format_double(rec.grad_norm_avg);
  line += ',' + format_double(rec.consensus_dist);
  line += ',' + optional_field(rec.tracker_err);
  line += ',' + optional_field(rec.heterogeneity);
  line += ',' + format_double(rec.rho);
  return line;
}

void write_metrics_csv(std::ostream& out, std::span<const MetricsRecord> records) {
  out << kMetricsHeader << '\n';
  for (const auto& r : records) out << format_record(r) << '\n';
}

MetricsCsvWriter::MetricsCsvWriter(std::ostream& out) : out_(&out) {
  *out_ << kMetricsHeader << '\n';
  out_->flush();
}

MetricsCsvWriter::MetricsCsvWriter(const std::filesystem::path& path) : file_(path, std::ios::binary), out_(&file_) {
  if (!file_) throw IoError("cannot open '" + path.string() + "' for writing");
  *out_ << kMetricsHeader << '\n';
  out_->flush();
}

void MetricsCsvWriter::write(const MetricsRecord& rec) {
  *out_ << format_record(rec) << '\n';
  out_->flush();
  if (!*out_) throw IoError("write failed");
}

std::vector<MetricsRecord> read_metrics_csv(std::istream& in) {
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  if (text.empty()) throw IoError("empty metrics file");
  if (text.back() != '\n') throw IoError("truncated metrics file (no final newline)");

  std::vector<MetricsRecord> out;
  std::size_t start = 0;
  std::size_t line_no = 0;
  while (start < text.size()) {
    const std::size_t end = text.find('\n', start);
    std::string_view line(text.data() + start, end - start);
    start = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line_no == 1) {
      if (line != kMetricsHeader) throw InvalidArgument("metrics schema mismatch: header '" + std::string(line) + "'");
      continue;
    }
    const auto fields = split(line);
    if (fields.size() != kMetricColumns.size() + 1) {
      throw IoError("expected " + std::to_string(kMetricColumns.size() + 1) + " fields, got " +
                        std::to_string(fields.size()),
                    line_no);
    }
    MetricsRecord r;
    std::size_t epoch = 0;
    auto [p, ec] = std::from_chars(fields[0].data(), fields[0].data() + fields[0].size(), epoch);
    if (ec != std::errc() || p != fields[0].data() + fields[0].size()) throw IoError("malformed epoch", line_no);
    r.epoch = epoch;
    auto required = [&](std::size_t k) {
      auto v = parse_field(fields[k], line_no);
      if (!v) throw IoError("missing required field " + std::string(kMetricColumns[k - 1]), line_no);
      return *v;
    };
    r.train_loss = required(1);
    r.test_acc = parse_field(fields[2], line_no);
    r.grad_norm_avg = required(3);
    r.consensus_dist = required(4);
    r.tracker_err = parse_field(fields[5], line_no);
    r.heterogeneity = parse_field(fields[6], line_no);
    r.rho = required(7);
    out.push_back(r);
  }
  return out;
}

std::vector<MetricsRecord> read_metrics_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  try {
    return read_metrics_csv(in);
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

OrderingAssertion parse_ordering(std::string_view text) {
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) throw InvalidArgument("ordering must look like 'metric:a>=b'");
  OrderingAssertion out;
  out.metric = std::string(text.substr(0, colon));
  bool known = false;
  for (auto c : kMetricColumns) known = known || c == out.metric;
  if (!known) throw InvalidArgument("unknown metric '" + out.metric + "'");
  const auto rel = text.substr(colon + 1);
  if (rel == "a>=b") {
    out.a_at_least_b = true;
  } else if (rel == "b>=a") {
    out.a_at_least_b = false;
  } else {
    throw InvalidArgument("ordering must be a>=b or b>=a, got '" + std::string(rel) + "'");
  }
  return out;
}

CompareReport compare_records(std::span<const MetricsRecord> a, std::span<const MetricsRecord> b,
                              const std::optional<OrderingAssertion>& assertion) {
  if (a.empty() || b.empty()) throw InvalidArgument("compare: a run has no rows");
  CompareReport report;
  report.epochs_a = a.back().epoch;
  report.epochs_b = b.back().epoch;
  for (std::size_t k = 0; k < kMetricColumns.size(); ++k) {
    MetricDelta d;
    d.metric = kMetricColumns[k];
    d.a = column(a.back(), k);
    d.b = column(b.back(), k);
    if (d.a && d.b) d.delta = *d.b - *d.a;
    report.deltas.push_back(d);
  }
  if (assertion) {
    report.assertion = assertion;
    bool passed = false;
    for (const auto& d : report.deltas) {
      if (d.metric != assertion->metric) continue;
      if (d.a && d.b) {
        passed = assertion->a_at_least_b ? *d.a >= *d.b - assertion->tolerance
                                         : *d.b >= *d.a - assertion->tolerance;
      }
    }
    report.passed = passed;
  }
  return report;
}

CompareReport compare_runs(const std::filesystem::path& csv_a, const std::filesystem::path& csv_b,
                           const std::optional<OrderingAssertion>& assertion) {
  const auto a = read_metrics_csv(csv_a);
  const auto b = read_metrics_csv(csv_b);
  return compare_records(a, b, assertion);
}

std::string CompareReport::to_string() const {
  std::ostringstream out;
  out << "final epoch: a=" << epochs_a << " b=" << epochs_b << '\n';
  for (const auto& d : deltas) {
    out << d.metric << ": a=" << (d.a ? format_double(*d.a) : "-") << " b=" << (d.b ? format_double(*d.b) : "-")
        << " delta=" << (d.delta ? format_double(*d.delta) : "-") << '\n';
  }
  if (assertion) {
    out << assertion->metric << (assertion->a_at_least_b ? " a>=b" : " b>=a") << ": "
        << (passed.value_or(false) ? "PASS" : "FAIL") << '\n';
  }
  return out.str();
}

}  // namespace decmom
