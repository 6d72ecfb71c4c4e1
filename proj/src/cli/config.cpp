#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "noisygap/cli.hpp"
#include "noisygap/error.hpp"
#include "noisygap/fock.hpp"
#include "noisygap/model_io.hpp"

namespace noisygap::cli {
namespace {

using nlohmann::json;

constexpr std::pair<Experiment, std::string_view> kExperimentNames[] = {
    {Experiment::kGapConvergence, "gap-convergence"},
    {Experiment::kLyapunov, "lyapunov"},
    {Experiment::kDecayCurves, "decay-curves"},
    {Experiment::kTrajectories, "trajectories"},
    {Experiment::kRelaxationScan, "relaxation-scan"},
    {Experiment::kSizeScan, "size-scan"},
    {Experiment::kBoundScan, "bound-scan"},
    {Experiment::kBunchingDistribution, "bunching-distribution"},
    {Experiment::kIprScan, "ipr-scan"},
};

// Parameters each experiment accepts, besides schema/experiment/model/out.
std::vector<std::string_view> parameter_keys(Experiment e) {
  switch (e) {
    case Experiment::kGapConvergence: return {"tMax", "nSamples", "cadence"};
    case Experiment::kLyapunov: return {"blockLength", "blockCount", "burnIn", "nSamples"};
    case Experiment::kDecayCurves: return {"tMax", "nSamples", "cadence", "diagnostics"};
    case Experiment::kTrajectories: return {"tMax", "nSamples", "cadence", "inputA", "inputB", "c", "delta"};
    case Experiment::kRelaxationScan:
      return {"betas", "c", "kinds", "nSamples", "repeats", "tMaxFactor", "records", "inputA", "inputB"};
    case Experiment::kSizeScan: return {"sizes", "blockLength", "blockCount", "burnIn", "nSamples"};
    case Experiment::kBoundScan: return {"betas", "c"};
    case Experiment::kBunchingDistribution: return {"inputA", "inputB", "times"};
    case Experiment::kIprScan: return {"sizes", "tMax", "nSamples"};
  }
  return {};
}

ExperimentConfig defaults_for(Experiment e) {
  ExperimentConfig c;
  c.experiment = e;
  switch (e) {
    case Experiment::kGapConvergence:
      // Past t ~ 30 / Delta the ratio |lambda_2/lambda_1| drops below what a
      // double-precision eigensolver resolves; 4e4 stays inside at the defaults.
      c.t_max = 40000;
      c.samples = 100;
      c.cadence = 100;
      break;
    case Experiment::kLyapunov:
      c.samples = 1;
      break;
    case Experiment::kSizeScan:
      c.samples = 1;
      c.sizes = {10, 20, 40};
      break;
    case Experiment::kDecayCurves:
      c.t_max = 10000;
      c.samples = 100;
      c.diagnostics = {Diagnostic::kEigRatio, Diagnostic::kSvRatio, Diagnostic::kOmegaEig, Diagnostic::kOmegaSv};
      break;
    case Experiment::kTrajectories:
      c.t_max = 20000;
      c.samples = 3;
      c.c = 1e-2;
      c.input_a = {-5, 5};
      c.input_b = {-1, 0};
      break;
    case Experiment::kRelaxationScan:
      c.betas = {0.05, 0.1, 0.2, 0.4};
      c.c = 1e-6;
      c.kinds = {RelaxationKind::kDelta, RelaxationKind::kLambdaSv, RelaxationKind::kX};
      c.samples = 100;
      c.input_a = {-5, 5};
      c.input_b = {-1, 0};
      break;
    case Experiment::kBoundScan:
      c.betas = {0.1, 0.2, 0.3, 0.4};
      c.c = 1e-6;
      break;
    case Experiment::kBunchingDistribution:
      c.input_a = {-6, 1, 8};
      c.input_b = {-1, 0, 1};
      c.times = {1000, 5000, 20000};
      break;
    case Experiment::kIprScan:
      c.sizes = {10, 20, 40};
      c.t_max = 10000;
      c.samples = 100;
      break;
  }
  return c;
}

// Collects violations instead of stopping at the first one.
class Reader {
 public:
  Reader(const json& doc, std::vector<ConfigIssue>& issues) : doc_(doc), issues_(issues) {}

  void fail(std::string field, std::string message) { issues_.push_back({std::move(field), std::move(message)}); }
  bool has(const char* key) const { return doc_.contains(key); }

  // Integers may be written as 1e6; the value must be integral and >= lo.
  void count(const char* key, std::size_t& out, std::size_t lo) {
    if (!has(key)) return;
    const json& v = doc_[key];
    if (!v.is_number()) return fail(key, "must be an integer");
    const double d = v.get<double>();
    if (!(d == std::floor(d)) || d < 0.0 || d > 9.0e15) return fail(key, "must be a non-negative integer");
    if (d < static_cast<double>(lo)) return fail(key, "must be >= " + std::to_string(lo));
    out = v.is_number_unsigned() ? v.get<std::size_t>() : static_cast<std::size_t>(d);
  }

  void number(const char* key, double& out) {
    if (!has(key)) return;
    const json& v = doc_[key];
    if (!v.is_number() || !std::isfinite(v.get<double>())) return fail(key, "must be a finite number");
    out = v.get<double>();
  }

  void numbers(const char* key, std::vector<double>& out) {
    if (!has(key)) return;
    const json& v = doc_[key];
    if (!v.is_array() || v.empty()) return fail(key, "must be a non-empty array of numbers");
    std::vector<double> r;
    for (const auto& x : v) {
      if (!x.is_number() || !std::isfinite(x.get<double>())) return fail(key, "must be a non-empty array of numbers");
      r.push_back(x.get<double>());
    }
    out = std::move(r);
  }

  template <class T>
  void integers(const char* key, std::vector<T>& out, bool allow_negative) {
    if (!has(key)) return;
    const json& v = doc_[key];
    const char* what = allow_negative ? "must be a non-empty array of integers"
                                      : "must be a non-empty array of non-negative integers";
    if (!v.is_array() || v.empty()) return fail(key, what);
    std::vector<T> r;
    for (const auto& x : v) {
      if (!x.is_number()) return fail(key, what);
      const double d = x.get<double>();
      if (d != std::floor(d) || std::abs(d) > 9.0e15 || (!allow_negative && d < 0.0)) return fail(key, what);
      r.push_back(static_cast<T>(d));
    }
    out = std::move(r);
  }

  std::vector<std::string> strings(const char* key) {
    const json& v = doc_[key];
    std::vector<std::string> r;
    if (!v.is_array() || v.empty()) {
      fail(key, "must be a non-empty array of strings");
      return r;
    }
    for (const auto& x : v) {
      if (!x.is_string()) {
        fail(key, "must be a non-empty array of strings");
        return {};
      }
      r.push_back(x.get<std::string>());
    }
    return r;
  }

 private:
  const json& doc_;
  std::vector<ConfigIssue>& issues_;
};

void check_input(Reader& r, const char* key, const std::vector<long>& input, std::size_t size) {
  if (input.empty()) return;
  if (input.size() > kMaxBosons) {
    r.fail(key, "at most " + std::to_string(kMaxBosons) + " bosons");
    return;
  }
  const SiteGrid grid(size);
  for (long x : input)
    if (x < grid.min_coordinate() || x > grid.max_coordinate()) {
      r.fail(key, "coordinate " + std::to_string(x) + " is outside [" + std::to_string(grid.min_coordinate()) +
                      ", " + std::to_string(grid.max_coordinate()) + "] for X = " + std::to_string(size));
      return;
    }
}

ExperimentConfig parse_impl(const json& doc, std::vector<ConfigIssue>& issues) {
  Reader r(doc, issues);
  if (!doc.is_object()) {
    r.fail("", "config must be a JSON object");
    return {};
  }

  if (doc.contains("schema")) {
    const json& s = doc["schema"];
    if (!s.is_number_integer() || s.get<long long>() != kSchemaVersion)
      r.fail("schema", "unsupported version (expected " + std::to_string(kSchemaVersion) + ")");
  }

  if (!doc.contains("experiment")) {
    r.fail("experiment", "missing");
    return {};
  }
  if (!doc["experiment"].is_string()) {
    r.fail("experiment", "must be a string");
    return {};
  }
  Experiment e;
  try {
    e = parse_experiment(doc["experiment"].get<std::string>());
  } catch (const ConfigError& err) {
    r.fail("experiment", err.message());
    return {};
  }
  ExperimentConfig c = defaults_for(e);

  const auto keys = parameter_keys(e);
  for (const auto& [key, value] : doc.items()) {
    if (key == "schema" || key == "experiment" || key == "model" || key == "out") continue;
    if (std::find(keys.begin(), keys.end(), key) == keys.end())
      r.fail(key, "unknown key for experiment " + std::string(experiment_name(e)));
  }

  bool model_ok = true;
  try {
    c.model = model_spec_from_json(doc.contains("model") ? doc["model"] : json::object());
  } catch (const ConfigError& err) {
    r.fail(err.field(), err.message());
    model_ok = false;
  }

  if (doc.contains("out")) {
    if (doc["out"].is_string() && !doc["out"].get<std::string>().empty())
      c.out = doc["out"].get<std::string>();
    else
      r.fail("out", "must be a non-empty string");
  }

  r.count("tMax", c.t_max, 1);
  r.count("nSamples", c.samples, 1);
  r.count("cadence", c.cadence, 0);
  r.count("repeats", c.repeats, 1);
  r.count("records", c.records, 1);
  r.count("blockLength", c.block_length, 1);
  r.count("blockCount", c.block_count, 1);
  r.count("burnIn", c.burn_in, 0);
  if (c.burn_in >= c.block_count) r.fail("burnIn", "must be smaller than blockCount");

  r.number("c", c.c);
  if (r.has("c") && !(c.c > 0.0 && c.c < 1.0)) r.fail("c", "must lie in (0, 1)");
  if (r.has("delta")) {
    double d = 0.0;
    r.number("delta", d);
    if (!(d > 0.0)) r.fail("delta", "must be positive");
    c.delta = d;
  }
  r.number("tMaxFactor", c.t_max_factor);
  if (!(c.t_max_factor > 0.0)) r.fail("tMaxFactor", "must be positive");

  r.numbers("betas", c.betas);
  for (double b : c.betas) {
    if (b < 0.0) {
      r.fail("betas", "must be non-negative");
      break;
    }
    if (e == Experiment::kRelaxationScan && b == 0.0) {
      r.fail("betas", "must be positive (beta = 0 never relaxes)");
      break;
    }
  }

  r.integers("sizes", c.sizes, false);
  for (std::size_t x : c.sizes) {
    if (x < 2 || x % 2) {
      r.fail("sizes", "every size must be even and >= 2");
      break;
    }
  }

  r.integers("times", c.times, false);
  for (std::size_t i = 0; i < c.times.size(); ++i) {
    if (c.times[i] == 0 || (i > 0 && c.times[i] <= c.times[i - 1])) {
      r.fail("times", "must be strictly increasing positive steps");
      break;
    }
  }

  r.integers("inputA", c.input_a, true);
  r.integers("inputB", c.input_b, true);
  if (c.input_a.size() != c.input_b.size()) r.fail("inputB", "must hold as many bosons as inputA");
  if (model_ok) {
    check_input(r, "inputA", c.input_a, c.model.size);
    check_input(r, "inputB", c.input_b, c.model.size);
  }

  if (r.has("diagnostics")) {
    std::set<Diagnostic> ds;
    for (const auto& name : r.strings("diagnostics")) {
      try {
        ds.insert(parse_diagnostic(name));
      } catch (const ConfigError& err) {
        r.fail("diagnostics", err.message());
      }
    }
    if (!ds.empty()) c.diagnostics = std::move(ds);
  }
  if (r.has("kinds")) {
    std::vector<RelaxationKind> ks;
    for (const auto& name : r.strings("kinds")) {
      try {
        const auto k = parse_relaxation_kind(name);
        if (std::find(ks.begin(), ks.end(), k) == ks.end()) ks.push_back(k);
      } catch (const ConfigError& err) {
        r.fail("kinds", err.message());
      }
    }
    if (!ks.empty()) c.kinds = std::move(ks);
  }

  // Scans vary one model field; the rest of the model must stay valid for each value.
  if (model_ok) {
    for (std::size_t x : c.sizes) {
      ModelSpec s = c.model;
      s.size = x;
      try {
        s.validate();
      } catch (const ConfigError& err) {
        r.fail("sizes", err.message());
        break;
      }
    }
  }
  return c;
}

}  // namespace

std::string_view experiment_name(Experiment e) {
  for (const auto& [k, name] : kExperimentNames)
    if (k == e) return name;
  return "unknown";
}

Experiment parse_experiment(std::string_view name) {
  for (const auto& [k, n] : kExperimentNames)
    if (n == name) return k;
  std::string known;
  for (const auto& [k, n] : kExperimentNames) known += (known.empty() ? "" : ", ") + std::string(n);
  throw ConfigError("experiment", "unknown experiment '" + std::string(name) + "' (known: " + known + ")");
}

json load_json_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("<file>", "cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  try {
    return json::parse(text);
  } catch (const json::parse_error& err) {
    throw ConfigError("<json>", err.what());  // the message carries line and column
  }
}

std::vector<ConfigIssue> check_config(const json& doc) {
  std::vector<ConfigIssue> issues;
  parse_impl(doc, issues);
  return issues;
}

ExperimentConfig parse_config(const json& doc) {
  std::vector<ConfigIssue> issues;
  auto c = parse_impl(doc, issues);
  if (!issues.empty()) throw ConfigError(issues.front().field, issues.front().message);
  return c;
}

json config_to_json(const ExperimentConfig& c) {
  json j;
  j["schema"] = kSchemaVersion;
  j["experiment"] = std::string(experiment_name(c.experiment));
  j["model"] = to_json(c.model);
  for (std::string_view key : parameter_keys(c.experiment)) {
    const std::string k(key);
    if (k == "tMax") j[k] = c.t_max;
    else if (k == "nSamples") j[k] = c.samples;
    else if (k == "cadence") j[k] = c.cadence;
    else if (k == "repeats") j[k] = c.repeats;
    else if (k == "records") j[k] = c.records;
    else if (k == "blockLength") j[k] = c.block_length;
    else if (k == "blockCount") j[k] = c.block_count;
    else if (k == "burnIn") j[k] = c.burn_in;
    else if (k == "c") j[k] = c.c;
    else if (k == "delta") {
      if (c.delta) j[k] = *c.delta;
    } else if (k == "tMaxFactor") j[k] = c.t_max_factor;
    else if (k == "betas") j[k] = c.betas;
    else if (k == "sizes") j[k] = c.sizes;
    else if (k == "times") j[k] = c.times;
    else if (k == "inputA") j[k] = c.input_a;
    else if (k == "inputB") j[k] = c.input_b;
    else if (k == "diagnostics") {
      std::vector<std::string> names;
      for (Diagnostic d : c.diagnostics) names.emplace_back(diagnostic_name(d));
      j[k] = names;
    } else if (k == "kinds") {
      std::vector<std::string> names;
      for (RelaxationKind kind : c.kinds) names.emplace_back(relaxation_kind_name(kind));
      j[k] = names;
    }
  }
  return j;
}

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, h >>= 4) s[static_cast<std::size_t>(i)] = kHex[h & 0xf];
  return s;
}

std::string config_hash(const ExperimentConfig& config) { return fnv1a_hex(config_to_json(config).dump()); }

std::filesystem::path resolve_out_dir(const ExperimentConfig& config, const std::optional<std::string>& flag) {
  if (flag) return *flag;
  if (config.out) return *config.out;
  return std::filesystem::path("out") / std::string(experiment_name(config.experiment));
}

}  // namespace noisygap::cli
