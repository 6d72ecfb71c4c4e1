#pragma once

// Experiment configs, artifact writers and the experiment runner behind the
// `noisygap` executable. A config is one JSON object:
//
//   {"schema": 1, "experiment": "gap-convergence", "model": {...}, "tMax": 100000}
//
// Parameters that an experiment does not use are rejected. docs/config-schema.md
// lists every key with its default.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "noisygap/ensemble.hpp"
#include "noisygap/models.hpp"

namespace noisygap::cli {

inline constexpr int kSchemaVersion = 1;

enum class Experiment {
  kGapConvergence,
  kLyapunov,
  kDecayCurves,
  kTrajectories,
  kRelaxationScan,
  kSizeScan,
  kBoundScan,
  kBunchingDistribution,
  kIprScan,
};

std::string_view experiment_name(Experiment e);
Experiment parse_experiment(std::string_view name);  // throws ConfigError

struct ExperimentConfig {
  Experiment experiment = Experiment::kGapConvergence;
  ModelSpec model;
  std::optional<std::string> out;  // output directory from the file

  std::size_t t_max = 0;
  std::size_t samples = 0;
  std::size_t cadence = 0;
  std::size_t repeats = 1;
  double c = 0.0;
  std::optional<double> delta;  // gap for the closed-form tau in `trajectories`
  double t_max_factor = 3.0;
  std::size_t records = 200;
  std::size_t block_length = 1000;
  std::size_t block_count = 1000;
  std::size_t burn_in = 10;
  std::vector<double> betas;
  std::vector<std::size_t> sizes;
  std::vector<std::size_t> times;
  std::vector<long> input_a;
  std::vector<long> input_b;
  std::set<Diagnostic> diagnostics;
  std::vector<RelaxationKind> kinds;
};

struct ConfigIssue {
  std::string field;
  std::string message;
};

/// Reads and parses a JSON file; syntax errors become ConfigError with field
/// "<json>"; the message names the line and column.
nlohmann::json load_json_file(const std::filesystem::path& path);

/// Every schema violation in the document, empty when it is valid.
std::vector<ConfigIssue> check_config(const nlohmann::json& doc);

/// Throws ConfigError for the first violation.
ExperimentConfig parse_config(const nlohmann::json& doc);

/// Fully resolved config (defaults filled in, output directory left out).
nlohmann::json config_to_json(const ExperimentConfig& config);

/// FNV-1a 64 of the canonical dump, as 16 lowercase hex digits.
std::string fnv1a_hex(std::string_view bytes);
std::string config_hash(const ExperimentConfig& config);

/// Shortest round-trip decimal; "inf", "-inf", "nan" for non-finite values.
std::string format_number(double v);

/// Quotes a field when it holds a comma, quote, CR or LF.
std::string csv_field(std::string_view s);

/// Header plus rows, CRLF-free, one trailing newline per record.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header);
  void add(std::vector<std::string> row);  // throws DimensionError on width mismatch
  std::string str() const;
  std::size_t rows() const noexcept { return rows_.size(); }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

/// Exclusive ownership of an output directory via an O_EXCL lockfile.
class OutputLock {
 public:
  explicit OutputLock(const std::filesystem::path& dir);  // throws Error when held
  ~OutputLock();
  OutputLock(const OutputLock&) = delete;
  OutputLock& operator=(const OutputLock&) = delete;

  static constexpr const char* kFileName = ".noisygap.lock";

 private:
  std::filesystem::path path_;
};

struct RunOptions {
  std::filesystem::path out_dir;
  std::size_t threads = 1;
  std::optional<std::uint64_t> seed;  // overrides model.seed
};

struct RunReport {
  nlohmann::json summary;
  std::vector<std::filesystem::path> files;
};

/// Runs one experiment and writes config.json, the CSV data files and
/// summary.json into options.out_dir (created when missing).
RunReport run_experiment(ExperimentConfig config, const RunOptions& options);

/// Output directory for a run: the flag, then the config's "out", then out/<experiment>.
std::filesystem::path resolve_out_dir(const ExperimentConfig& config, const std::optional<std::string>& flag);

}  // namespace noisygap::cli
