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

#include "decmom/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "decmom/error.hpp"

namespace decmom {

namespace {

bool is_key_char(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' || c == '-' ||
         c == '.';
}

class DocumentParser {
 public:
  explicit DocumentParser(std::string_view text) : s_(text) {}

  ConfigTable parse_document() {
    ConfigTable out;
    std::string prefix;
    while (!eof()) {
      skip_blank();
      if (eof()) break;
      const char c = peek();
      if (c == '\n') {
        advance();
        continue;
      }
      if (c == '#') {
        skip_comment();
        continue;
      }
      if (c == '[') {
        advance();
        skip_blank();
        const std::string name = parse_key();
        skip_blank();
        expect(']');
        prefix = name + ".";
      } else {
        const std::size_t key_line = line_;
        const std::string key = prefix + parse_key();
        skip_blank();
        expect('=');
        skip_blank();
        insert_value(out, key, key_line);
      }
      end_of_line();
    }
    return out;
  }

  // Value occupying the entire input (used for overrides).
  bool parse_standalone(ConfigValue& out) {
    skip_blank();
    if (eof() || peek() == '{') return false;
    try {
      ConfigTable scratch;
      insert_value(scratch, "_", line_);
      skip_blank();
      if (!eof()) return false;
      out = scratch.at("_");
      return true;
    } catch (const ConfigError&) {
      return false;
    }
  }

 private:
  bool eof() const { return pos_ >= s_.size(); }
  char peek() const { return s_[pos_]; }
  void advance() {
    if (s_[pos_] == '\n') ++line_;
    ++pos_;
  }

  [[noreturn]] void fail(const std::string& what) const { throw ConfigError("", what, line_); }

  void skip_blank() {
    while (!eof() && (peek() == ' ' || peek() == '\t' || peek() == '\r')) advance();
  }
  // Whitespace, newlines and comments, as allowed inside arrays.
  void skip_any() {
    for (;;) {
      skip_blank();
      if (eof()) return;
      if (peek() == '\n') {
        advance();
      } else if (peek() == '#') {
        skip_comment();
      } else {
        return;
      }
    }
  }
  void skip_comment() {
    while (!eof() && peek() != '\n') advance();
  }
  void expect(char c) {
    if (eof() || peek() != c) fail(std::string("expected '") + c + "'");
    advance();
  }
  void end_of_line() {
    skip_blank();
    if (!eof() && peek() == '#') skip_comment();
    if (eof()) return;
    if (peek() != '\n') fail("unexpected trailing characters");
    advance();
  }

  std::string parse_key() {
    const std::size_t start = pos_;
    while (!eof() && is_key_char(peek())) advance();
    if (pos_ == start) fail("expected a key");
    std::string key(s_.substr(start, pos_ - start));
    if (key.front() == '.' || key.back() == '.' || key.find("..") != std::string::npos) fail("malformed key '" + key + "'");
    return key;
  }

  void put(ConfigTable& out, const std::string& key, ConfigValue v) {
    if (!out.emplace(key, std::move(v)).second) throw ConfigError(key, "duplicate key", line_);
  }

  void insert_value(ConfigTable& out, const std::string& key, std::size_t key_line) {
    if (eof()) fail("missing value for '" + key + "'");
    const char c = peek();
    if (c == '{') {
      for (auto& [k, v] : parse_inline_table()) put(out, key + "." + k, std::move(v));
    } else if (c == '[') {
      ConfigValue v{parse_table_array(), key_line};
      put(out, key, std::move(v));
    } else {
      put(out, key, parse_scalar(key_line));
    }
  }

  ConfigTable parse_inline_table() {
    expect('{');
    ConfigTable table;
    skip_blank();
    if (!eof() && peek() == '}') {
      advance();
      return table;
    }
    for (;;) {
      skip_blank();
      const std::size_t key_line = line_;
      const std::string key = parse_key();
      skip_blank();
      expect('=');
      skip_blank();
      insert_value(table, key, key_line);
      skip_blank();
      if (eof()) fail("unterminated inline table");
      if (peek() == ',') {
        advance();
        continue;
      }
      expect('}');
      return table;
    }
  }

  std::vector<ConfigTable> parse_table_array() {
    expect('[');
    std::vector<ConfigTable> items;
    for (;;) {
      skip_any();
      if (eof()) fail("unterminated array");
      if (peek() == ']') {
        advance();
        return items;
      }
      if (peek() != '{') fail("arrays may only contain inline tables");
      items.push_back(parse_inline_table());
      skip_any();
      if (!eof() && peek() == ',') advance();
    }
  }

  ConfigValue parse_scalar(std::size_t key_line) {
    const char c = peek();
    if (c == '"') return {parse_string(), key_line};
    const std::size_t start = pos_;
    while (!eof() && peek() != ',' && peek() != '}' && peek() != ']' && peek() != '\n' && peek() != '#' &&
           peek() != ' ' && peek() != '\t' && peek() != '\r') {
      advance();
    }
    std::string tok(s_.substr(start, pos_ - start));
    if (tok == "true") return {true, key_line};
    if (tok == "false") return {false, key_line};
    std::string digits;
    for (char ch : tok) {
      if (ch != '_') digits.push_back(ch);
    }
    if (digits.empty()) fail("expected a value");
    const bool floating = digits.find_first_of(".eE") != std::string::npos;
    const char* first = digits.data();
    const char* last = digits.data() + digits.size();
    if (*first == '+') ++first;
    if (floating) {
      double v = 0.0;
      auto [p, ec] = std::from_chars(first, last, v);
      if (ec != std::errc() || p != last || !std::isfinite(v)) fail("malformed number '" + tok + "'");
      return {v, key_line};
    }
    std::int64_t v = 0;
    auto [p, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || p != last) fail("malformed value '" + tok + "' (strings need quotes)");
    return {v, key_line};
  }

  std::string parse_string() {
    expect('"');
    std::string out;
    for (;;) {
      if (eof() || peek() == '\n') fail("unterminated string");
      char c = peek();
      advance();
      if (c == '"') return out;
      if (c == '\\') {
        if (eof()) fail("unterminated escape");
        const char e = peek();
        advance();
        switch (e) {
          case 'n': out.push_back('\n'); break;
          case 't': out.push_back('\t'); break;
          case '"': out.push_back('"'); break;
          case '\\': out.push_back('\\'); break;
          default: fail(std::string("unsupported escape \\") + e);
        }
      } else {
        out.push_back(c);
      }
    }
  }

  std::string_view s_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
};

// ---------------------------------------------------------------- typed access

const char* type_name(const ConfigValue& v) {
  switch (v.value.index()) {
    case 0: return "integer";
    case 1: return "float";
    case 2: return "boolean";
    case 3: return "string";
    default: return "array";
  }
}

std::int64_t as_int(const std::string& key, const ConfigValue& v) {
  if (const auto* i = std::get_if<std::int64_t>(&v.value)) return *i;
  throw ConfigError(key, std::string("expected an integer, got ") + type_name(v), v.line);
}

std::size_t as_count(const std::string& key, const ConfigValue& v, std::size_t min) {
  const auto i = as_int(key, v);
  if (i < static_cast<std::int64_t>(min)) throw ConfigError(key, "must be >= " + std::to_string(min), v.line);
  return static_cast<std::size_t>(i);
}

double as_real(const std::string& key, const ConfigValue& v) {
  if (const auto* d = std::get_if<double>(&v.value)) return *d;
  if (const auto* i = std::get_if<std::int64_t>(&v.value)) return static_cast<double>(*i);
  throw ConfigError(key, std::string("expected a number, got ") + type_name(v), v.line);
}

bool as_bool(const std::string& key, const ConfigValue& v) {
  if (const auto* b = std::get_if<bool>(&v.value)) return *b;
  throw ConfigError(key, std::string("expected true or false, got ") + type_name(v), v.line);
}

std::string as_string(const std::string& key, const ConfigValue& v) {
  if (const auto* s = std::get_if<std::string>(&v.value)) return *s;
  throw ConfigError(key, std::string("expected a string, got ") + type_name(v), v.line);
}

std::size_t edit_distance(const std::string& a, const std::string& b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

std::string suggestion(const std::string& key) {
  std::string best;
  std::size_t best_d = 3;
  for (const auto& k : known_config_keys()) {
    const std::size_t d = edit_distance(key, k);
    if (d < best_d) {
      best_d = d;
      best = k;
    }
  }
  return best.empty() ? "" : " (did you mean '" + best + "'?)";
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  if (path.is_relative() && !base.empty()) path = base / path;
  return path;
}

const std::set<std::string>& topology_names() {
  static const std::set<std::string> names{"full_mesh", "ring", "custom"};
  return names;
}

ModelKind parse_model(const std::string& key, const ConfigValue& v) {
  const auto name = as_string(key, v);
  if (name == "synthetic") return ModelKind::kSynthetic;
  if (name == "logreg") return ModelKind::kLogReg;
  if (name == "mlp") return ModelKind::kMlp;
  throw ConfigError(key, "unknown model '" + name + "' (expected synthetic|logreg|mlp)", v.line);
}

}  // namespace

ConfigTable parse_config_document(std::string_view text) { return DocumentParser(text).parse_document(); }

ConfigValue parse_override_value(std::string_view text) {
  ConfigValue v;
  if (DocumentParser(text).parse_standalone(v)) {
    v.line = 0;
    return v;
  }
  std::string s(text);
  if (!s.empty() && s.front() == '{') throw ConfigError("", "inline tables are not supported in overrides; set dotted keys instead");
  return {s, 0};
}

double default_eta(ModelKind kind) {
  // Picked by sweeping {1e-2, 10^-1.5, 1e-1, 10^-0.5} under D-SUM at desk scale.
  switch (kind) {
    case ModelKind::kSynthetic:
    case ModelKind::kLogReg:
    case ModelKind::kMlp:
      return 0.01;
  }
  return 0.01;
}

const std::vector<std::string>& known_config_keys() {
  static const std::vector<std::string> keys{
      "seed",         "workers",          "epochs",
      "algo",         "alpha",            "beta",
      "eta",          "lambda",           "k_local",
      "model",        "mlp.hidden",       "nonconvex.amplitude",
      "topology",     "custom_adjacency", "schedule",
      "data.source",  "data.path",        "data.labels_path",
      "data.max_samples",                 "data.synthetic.classes",
      "data.synthetic.dim",               "data.synthetic.samples",
      "data.synthetic.blob_stddev",       "data.dirichlet",
      "data.batch_size",                  "data.test_fraction",
      "data.full_batch",                  "diag_every",
      "diag_sigma",   "threads",          "out",
  };
  return keys;
}

RunConfig config_from_document(const ConfigTable& doc, const std::filesystem::path& base_dir) {
  const auto& known = known_config_keys();
  bool has_data = false;
  for (const auto& [key, v] : doc) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw ConfigError(key, "unknown key '" + key + "'" + suggestion(key), v.line);
    }
    if (key.rfind("data.", 0) == 0) has_data = true;
  }
  for (const char* required : {"model", "workers", "epochs"}) {
    if (!doc.count(required)) throw ConfigError(required, "missing required key");
  }
  if (!has_data) throw ConfigError("data", "missing required [data] section");

  auto get = [&](const std::string& key) -> const ConfigValue* {
    auto it = doc.find(key);
    return it == doc.end() ? nullptr : &it->second;
  };

  RunConfig c;
  c.model.kind = parse_model("model", *get("model"));
  c.workers = as_count("workers", *get("workers"), 1);
  c.epochs = as_count("epochs", *get("epochs"), 1);
  if (auto v = get("seed")) {
    const auto s = as_int("seed", *v);
    if (s < 0) throw ConfigError("seed", "must be non-negative", v->line);
    c.seed = static_cast<std::uint64_t>(s);
  }

  if (auto v = get("algo")) {
    try {
      c.hyper.algo = parse_algorithm(as_string("algo", *v));
    } catch (const InvalidArgument& e) {
      throw ConfigError("algo", e.what(), v->line);
    }
  }
  if (auto v = get("alpha")) {
    c.hyper.alpha = as_real("alpha", *v);
    if (!(c.hyper.alpha >= 0.0)) throw ConfigError("alpha", "must be >= 0", v->line);
  }
  if (auto v = get("beta")) {
    c.hyper.beta = as_real("beta", *v);
    if (!(c.hyper.beta >= 0.0 && c.hyper.beta < 1.0)) throw ConfigError("beta", "must be in [0, 1)", v->line);
  }
  c.hyper.eta = default_eta(c.model.kind);
  if (auto v = get("eta")) {
    c.hyper.eta = as_real("eta", *v);
    if (!(c.hyper.eta > 0.0)) throw ConfigError("eta", "must be > 0", v->line);
  }
  if (auto v = get("lambda")) {
    c.hyper.lambda = as_real("lambda", *v);
    if (!(c.hyper.lambda >= 0.0 && c.hyper.lambda <= 1.0)) throw ConfigError("lambda", "must be in [0, 1]", v->line);
  }
  if (auto v = get("k_local")) c.hyper.k_local = as_count("k_local", *v, 1);

  if (auto v = get("mlp.hidden")) c.model.mlp_hidden = as_count("mlp.hidden", *v, 1);
  if (auto v = get("nonconvex.amplitude")) {
    c.model.nonconvex_amplitude = as_real("nonconvex.amplitude", *v);
    if (!(c.model.nonconvex_amplitude >= 0.0)) throw ConfigError("nonconvex.amplitude", "must be >= 0", v->line);
  }

  if (auto v = get("topology")) {
    c.topology = as_string("topology", *v);
    if (!topology_names().count(c.topology)) {
      throw ConfigError("topology", "unknown topology '" + c.topology + "' (expected full_mesh|ring|custom)", v->line);
    }
  }
  if (auto v = get("custom_adjacency")) {
    c.custom_adjacency = resolve(base_dir, as_string("custom_adjacency", *v));
    if (!std::filesystem::exists(c.custom_adjacency)) {
      throw ConfigError("custom_adjacency", "file not found: " + c.custom_adjacency.string(), v->line);
    }
  }
  if (auto v = get("schedule")) {
    const auto* items = std::get_if<std::vector<ConfigTable>>(&v->value);
    if (items == nullptr) throw ConfigError("schedule", "expected an array of {until_epoch, topology} tables", v->line);
    if (items->empty()) throw ConfigError("schedule", "must not be empty", v->line);
    std::size_t prev = 0;
    for (std::size_t k = 0; k < items->size(); ++k) {
      const auto& t = (*items)[k];
      const std::string where = "schedule[" + std::to_string(k) + "]";
      for (const auto& [field, fv] : t) {
        if (field != "until_epoch" && field != "topology") {
          throw ConfigError(where + "." + field, "unknown key", fv.line);
        }
      }
      if (!t.count("until_epoch") || !t.count("topology")) {
        throw ConfigError(where, "needs until_epoch and topology", v->line);
      }
      ScheduleEntry e;
      e.until_epoch = as_count(where + ".until_epoch", t.at("until_epoch"), 1);
      e.topology = as_string(where + ".topology", t.at("topology"));
      if (!topology_names().count(e.topology)) {
        throw ConfigError(where + ".topology", "unknown topology '" + e.topology + "'", t.at("topology").line);
      }
      if (e.until_epoch <= prev) throw ConfigError(where + ".until_epoch", "must increase", t.at("until_epoch").line);
      prev = e.until_epoch;
      c.schedule.push_back(e);
    }
    if (prev < c.epochs) {
      throw ConfigError("schedule", "covers epochs [0, " + std::to_string(prev) + ") but epochs = " +
                                        std::to_string(c.epochs),
                        v->line);
    }
    if (!c.topology.empty()) throw ConfigError("schedule", "set either topology or schedule, not both", v->line);
  }
  const bool uses_custom = c.topology == "custom" ||
                           std::any_of(c.schedule.begin(), c.schedule.end(),
                                       [](const ScheduleEntry& e) { return e.topology == "custom"; });
  if (uses_custom && c.custom_adjacency.empty()) {
    throw ConfigError("custom_adjacency", "required when a custom topology is used");
  }

  // data
  if (auto v = get("data.source")) {
    c.data.source = as_string("data.source", *v);
    if (c.data.source != "synthetic" && c.data.source != "idx" && c.data.source != "csv") {
      throw ConfigError("data.source", "expected synthetic|idx|csv", v->line);
    }
  }
  if (auto v = get("data.path")) c.data.path = resolve(base_dir, as_string("data.path", *v));
  if (auto v = get("data.labels_path")) c.data.labels_path = resolve(base_dir, as_string("data.labels_path", *v));
  if (auto v = get("data.max_samples")) c.data.max_samples = as_count("data.max_samples", *v, 0);
  if (auto v = get("data.synthetic.classes")) c.data.synthetic.classes = as_count("data.synthetic.classes", *v, 2);
  if (auto v = get("data.synthetic.dim")) c.data.synthetic.dim = as_count("data.synthetic.dim", *v, 1);
  if (auto v = get("data.synthetic.samples")) c.data.synthetic.samples = as_count("data.synthetic.samples", *v, 2);
  if (auto v = get("data.synthetic.blob_stddev")) {
    c.data.synthetic.blob_stddev = as_real("data.synthetic.blob_stddev", *v);
    if (!(c.data.synthetic.blob_stddev >= 0.0)) throw ConfigError("data.synthetic.blob_stddev", "must be >= 0", v->line);
  }
  if (auto v = get("data.dirichlet")) {
    c.data.dirichlet = as_real("data.dirichlet", *v);
    if (!(c.data.dirichlet > 0.0)) throw ConfigError("data.dirichlet", "must be > 0", v->line);
  }
  if (auto v = get("data.batch_size")) c.data.batch_size = as_count("data.batch_size", *v, 1);
  if (auto v = get("data.test_fraction")) {
    c.data.test_fraction = as_real("data.test_fraction", *v);
    if (!(c.data.test_fraction > 0.0 && c.data.test_fraction < 1.0)) {
      throw ConfigError("data.test_fraction", "must be in (0, 1)", v->line);
    }
  }
  if (auto v = get("data.full_batch")) c.data.full_batch = as_bool("data.full_batch", *v);
  if (c.data.source != "synthetic") {
    if (c.data.path.empty()) throw ConfigError("data.path", "required for source '" + c.data.source + "'");
    if (!std::filesystem::exists(c.data.path)) throw ConfigError("data.path", "file not found: " + c.data.path.string());
    if (c.data.source == "idx") {
      if (c.data.labels_path.empty()) throw ConfigError("data.labels_path", "required for IDX data");
      if (!std::filesystem::exists(c.data.labels_path)) {
        throw ConfigError("data.labels_path", "file not found: " + c.data.labels_path.string());
      }
    }
  }

  if (auto v = get("diag_every")) c.diag_every = as_count("diag_every", *v, 1);
  if (auto v = get("diag_sigma")) c.diag_sigma = as_bool("diag_sigma", *v);
  if (auto v = get("threads")) c.threads = as_count("threads", *v, 1);
  if (auto v = get("out")) c.out = as_string("out", *v);

  if ((c.topology == "ring" || std::any_of(c.schedule.begin(), c.schedule.end(),
                                           [](const ScheduleEntry& e) { return e.topology == "ring"; })) &&
      c.workers < 3) {
    throw ConfigError("topology", "ring needs at least 3 workers");
  }
  return c;
}

void apply_override(ConfigTable& doc, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    throw ConfigError("", "override '" + std::string(assignment) + "' is not of the form key=value");
  }
  std::string key(assignment.substr(0, eq));
  while (!key.empty() && key.back() == ' ') key.pop_back();
  doc[key] = parse_override_value(assignment.substr(eq + 1));
}

RunConfig load_config_text(std::string_view text, const std::vector<std::string>& overrides,
                           const std::filesystem::path& base_dir) {
  ConfigTable doc = parse_config_document(text);
  for (const auto& o : overrides) apply_override(doc, o);
  return config_from_document(doc, base_dir);
}

RunConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot open config file '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return load_config_text(buf.str(), overrides, path.parent_path());
}

std::vector<ScheduleEntry> effective_schedule(const RunConfig& config) {
  if (!config.schedule.empty()) return config.schedule;
  if (!config.topology.empty()) return {{config.epochs, config.topology}};
  const std::string second = config.workers >= 3 ? "ring" : "full_mesh";
  if (config.epochs == 1) return {{1, "full_mesh"}};
  const std::size_t half = config.epochs / 2;
  return {{half, "full_mesh"}, {config.epochs, second}};
}

}  // namespace decmom
