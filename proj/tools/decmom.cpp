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


// decmom: run a decentralized momentum SGD experiment from a config file,
// or compare two metrics CSVs.
//
// Exit codes: 0 success, 1 failed ordering assertion (compare), 2 usage or
// config error, 3 divergence.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#if __has_include(<CLI/CLI.hpp>)
#include <CLI/CLI.hpp>
#else
#include "CLI11.hpp"
#endif
#include "decmom/config.hpp"
#include "decmom/diagnostics.hpp"
#include "decmom/error.hpp"
#include "decmom/experiment.hpp"
#include "decmom/metrics_csv.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitAssertion = 1;
constexpr int kExitConfig = 2;
constexpr int kExitDiverged = 3;

struct RunFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> algo;
  std::optional<std::string> out;
  std::optional<std::size_t> threads;
  std::vector<std::string> sets;
  std::optional<std::string> sweep;
  std::optional<std::string> trace_batches;
};

struct BatchRecord {
  std::size_t epoch, step, worker;
  bool bootstrap;
  std::vector<std::size_t> indices;
};

decmom::RunConfig resolve_config(const RunFlags& flags, const std::vector<std::string>& extra_sets) {
  std::vector<std::string> sets = flags.sets;
  sets.insert(sets.end(), extra_sets.begin(), extra_sets.end());
  decmom::RunConfig config = decmom::load_config(flags.config, sets);
  if (flags.seed) config.seed = *flags.seed;
  if (flags.algo) {
    try {
      config.hyper.algo = decmom::parse_algorithm(*flags.algo);
    } catch (const decmom::InvalidArgument& e) {
      throw decmom::ConfigError("--algo", e.what());
    }
  }
  if (flags.out) config.out = *flags.out;
  if (flags.threads) {
    if (*flags.threads == 0) throw decmom::ConfigError("--threads", "must be >= 1");
    config.threads = *flags.threads;
  }
  return config;
}

void print_startup(const decmom::Experiment& ex) {
  std::ostringstream msg;
  msg << "decmom: algo=" << decmom::to_string(ex.config.hyper.algo)
      << " eta=" << decmom::format_double(ex.config.hyper.eta) << " rho=";
  const auto& entries = ex.cohort.schedule.entries();
  for (std::size_t k = 0; k < entries.size(); ++k) {
    if (k != 0) msg << ", ";
    msg << decmom::format_double(entries[k].matrix->rho()) << " [" << entries[k].begin << ", " << entries[k].end
        << ") " << entries[k].matrix->label();
  }
  std::cerr << msg.str() << '\n';
}

void write_batch_trace(const std::string& path, std::vector<BatchRecord> batches) {
  std::sort(batches.begin(), batches.end(), [](const BatchRecord& a, const BatchRecord& b) {
    return std::tie(a.epoch, a.bootstrap, a.step, a.worker) < std::tie(b.epoch, b.bootstrap, b.step, b.worker);
  });
  std::ofstream out(path, std::ios::binary);
  if (!out) throw decmom::IoError("cannot open '" + path + "' for writing");
  out << "worker,epoch,step,bootstrap,indices\n";
  for (const auto& b : batches) {
    out << b.worker << ',' << b.epoch << ',' << b.step << ',' << (b.bootstrap ? 1 : 0) << ',';
    for (std::size_t k = 0; k < b.indices.size(); ++k) out << (k ? " " : "") << b.indices[k];
    out << '\n';
  }
}

struct SingleResult {
  bool diverged = false;
  std::optional<decmom::MetricsRecord> last;
};

// Builds and runs one experiment. Config-type failures propagate.
SingleResult run_one(const decmom::RunConfig& config, const std::optional<std::string>& trace_path) {
  auto ex = decmom::build_experiment(config);
  print_startup(*ex);

  std::optional<decmom::MetricsCsvWriter> writer;
  if (config.out.empty()) {
    writer.emplace(std::cout);
  } else {
    writer.emplace(config.out);
  }

  std::mutex trace_mutex;
  std::vector<BatchRecord> batches;
  decmom::EpochHooks hooks;
  if (trace_path) {
    hooks.on_batch = [&](const decmom::BatchEvent& e) {
      std::lock_guard lock(trace_mutex);
      batches.push_back({e.epoch, e.step, e.worker, e.bootstrap, {e.indices.begin(), e.indices.end()}});
    };
  }

  SingleResult result;
  const auto outcome = decmom::run_experiment(*ex, [&](const decmom::MetricsRecord& r) { writer->write(r); }, hooks);
  if (!outcome.records.empty()) result.last = outcome.records.back();
  if (trace_path) write_batch_trace(*trace_path, std::move(batches));

  if (outcome.diverged) {
    std::cerr << "decmom: " << outcome.divergence_message << '\n';
    result.diverged = true;
    return result;
  }
  if (config.diag_sigma) {
    const auto x_bar = decmom::average_x(ex->cohort);
    const double sigma2 = decmom::stochastic_variance(ex->problem(), x_bar, config.seed);
    std::cerr << "decmom: sigma2_hat=" << decmom::format_double(sigma2) << " at the final averaged model\n";
  }
  return result;
}

std::vector<std::string> sweep_values(const std::string& key, const std::string& list) {
  if (list == "grid") {
    if (key != "eta") throw decmom::ConfigError("--sweep", "'grid' is only defined for eta");
    std::vector<std::string> grid;
    for (double e : {-2.0, -1.5, -1.0, -0.5}) grid.push_back(decmom::format_double(std::pow(10.0, e)));
    return grid;
  }
  std::vector<std::string> values;
  std::stringstream in(list);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (!item.empty()) values.push_back(item);
  }
  if (values.empty()) throw decmom::ConfigError("--sweep", "no values given");
  return values;
}

std::string with_suffix(const std::filesystem::path& out, const std::string& suffix) {
  std::filesystem::path p = out;
  p.replace_filename(p.stem().string() + "." + suffix + p.extension().string());
  return p.string();
}

int run_command(const RunFlags& flags) {
  try {
    if (!flags.sweep) {
      const auto config = resolve_config(flags, {});
      return run_one(config, flags.trace_batches).diverged ? kExitDiverged : kExitOk;
    }
    const auto eq = flags.sweep->find('=');
    if (eq == std::string::npos || eq == 0) throw decmom::ConfigError("--sweep", "expected key=v1,v2,...");
    const std::string key = flags.sweep->substr(0, eq);
    const auto values = sweep_values(key, flags.sweep->substr(eq + 1));

    // Validate every point before running any of them.
    std::vector<decmom::RunConfig> configs;
    for (const auto& v : values) {
      auto config = resolve_config(flags, {key + "=" + v});
      if (config.out.empty()) throw decmom::ConfigError("--out", "a sweep needs an output path (--out or out =)");
      config.out = with_suffix(config.out, key + "=" + v);
      configs.push_back(config);
    }
    bool any_diverged = false;
    std::cout << key << ",status,final_train_loss,final_grad_norm_avg,final_test_acc,csv\n";
    for (std::size_t k = 0; k < configs.size(); ++k) {
      const auto result = run_one(configs[k], std::nullopt);
      any_diverged = any_diverged || result.diverged;
      std::cout << values[k] << ',' << (result.diverged ? "diverged" : "ok") << ',';
      if (result.last) {
        std::cout << decmom::format_double(result.last->train_loss) << ','
                  << decmom::format_double(result.last->grad_norm_avg) << ','
                  << (result.last->test_acc ? decmom::format_double(*result.last->test_acc) : "");
      } else {
        std::cout << ",,";
      }
      std::cout << ',' << configs[k].out.string() << '\n';
    }
    return any_diverged ? kExitDiverged : kExitOk;
  } catch (const decmom::ConfigError& e) {
    std::cerr << "decmom: config error: " << e.what() << '\n';
  } catch (const decmom::IoError& e) {
    std::cerr << "decmom: " << e.what() << '\n';
  } catch (const decmom::TopologyError& e) {
    std::cerr << "decmom: topology error: " << e.what() << '\n';
  } catch (const decmom::InvalidArgument& e) {
    std::cerr << "decmom: invalid configuration: " << e.what() << '\n';
  } catch (const decmom::StateError& e) {
    std::cerr << "decmom: invalid configuration: " << e.what() << '\n';
  }
  return kExitConfig;
}

int compare_command(const std::string& a, const std::string& b, const std::optional<std::string>& expect,
                    double tolerance) {
  try {
    std::optional<decmom::OrderingAssertion> assertion;
    if (expect) {
      assertion = decmom::parse_ordering(*expect);
      assertion->tolerance = tolerance;
    }
    const auto report = decmom::compare_runs(a, b, assertion);
    std::cout << report.to_string();
    return report.passed.value_or(true) ? kExitOk : kExitAssertion;
  } catch (const std::exception& e) {
    std::cerr << "decmom compare: " << e.what() << '\n';
    return kExitConfig;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Decentralized momentum SGD simulator (SUM, D-SUM, GT-DSUM)"};
  app.require_subcommand(0, 1);

  RunFlags flags;
  app.add_option("--config", flags.config, "Run configuration file");
  app.add_option("--seed", flags.seed, "Overrides the config seed");
  app.add_option("--algo", flags.algo, "vanilla | dsum | gtdsum");
  app.add_option("--out", flags.out, "Metrics CSV path (default: standard output)");
  app.add_option("--threads", flags.threads, "Worker threads; results do not depend on it");
  app.add_option("--set", flags.sets, "key=value override, repeatable");
  app.add_option("--sweep", flags.sweep, "key=v1,v2,... (or eta=grid); one CSV per value");
  app.add_option("--trace-batches", flags.trace_batches, "Write every minibatch's indices to this file");

  auto* compare = app.add_subcommand("compare", "Compare the final rows of two metrics CSVs");
  std::string csv_a, csv_b;
  std::optional<std::string> expect;
  double tolerance = 0.0;
  compare->add_option("a", csv_a, "First CSV")->required();
  compare->add_option("b", csv_b, "Second CSV")->required();
  compare->add_option("--expect", expect, "Ordering to check, e.g. test_acc:a>=b");
  compare->add_option("--tolerance", tolerance, "Slack for --expect");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  if (compare->parsed()) return compare_command(csv_a, csv_b, expect, tolerance);
  if (flags.config.empty()) {
    std::cerr << "decmom: --config is required\n";
    return kExitConfig;
  }
  return run_command(flags);
}
