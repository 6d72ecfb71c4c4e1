// noisygap run <config.json> [--out DIR] [--threads N] [--seed S]
// noisygap validate <config.json>
//
// Exit codes: 0 success, 1 I/O or lock failure, 2 invalid config or usage,
// 3 numerical failure. Failures also print one JSON error record on stderr.

#include <iostream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"
#include "noisygap/cli.hpp"
#include "noisygap/error.hpp"

namespace {

namespace cli = noisygap::cli;
using nlohmann::json;

int report_error(int code, const std::string& kind, const std::string& field, const std::string& message) {
  json rec = {{"status", "error"}, {"exit_code", code}, {"kind", kind}, {"message", message}};
  if (!field.empty()) rec["field"] = field;
  std::cerr << rec.dump() << "\n";
  return code;
}

int do_validate(const std::string& path) {
  try {
    const auto issues = cli::check_config(cli::load_json_file(path));
    if (issues.empty()) {
      std::cout << "valid\n";
      return 0;
    }
    std::cout << "invalid\n";
    for (const auto& i : issues) std::cout << "  " << (i.field.empty() ? "<root>" : i.field) << ": " << i.message << "\n";
    return 2;
  } catch (const noisygap::ConfigError& e) {
    std::cout << "invalid\n  " << e.field() << ": " << e.message() << "\n";
    return 2;
  }
}

int do_run(const std::string& path, const std::optional<std::string>& out, std::size_t threads,
           const std::optional<std::uint64_t>& seed) {
  cli::ExperimentConfig config;
  try {
    config = cli::parse_config(cli::load_json_file(path));
  } catch (const noisygap::ConfigError& e) {
    return report_error(2, "config", e.field(), e.message());
  }
  try {
    cli::RunOptions opts{cli::resolve_out_dir(config, out), threads, seed};
    const auto report = cli::run_experiment(config, opts);
    for (const auto& f : report.files) std::cout << f.string() << "\n";
    return 0;
  } catch (const noisygap::NumericalError& e) {
    return report_error(3, "numerical", "", e.what());
  } catch (const noisygap::ConfigError& e) {
    return report_error(2, "config", e.field(), e.message());
  } catch (const noisygap::DomainError& e) {
    return report_error(2, "config", "", e.what());
  } catch (const std::exception& e) {
    return report_error(1, "io", "", e.what());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Noisy linear-optics relaxation experiments"};
  app.require_subcommand(1);

  std::string run_path, validate_path;
  std::optional<std::string> out;
  std::size_t threads = std::max(1u, std::thread::hardware_concurrency());
  std::optional<std::uint64_t> seed;

  auto* run = app.add_subcommand("run", "run an experiment and write its artifacts");
  run->add_option("config", run_path, "experiment config (JSON)")->required();
  run->add_option("--out", out, "output directory (overrides the config)");
  run->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
  run->add_option("--seed", seed, "base seed (overrides model.seed)");

  auto* validate = app.add_subcommand("validate", "check a config without running it");
  validate->add_option("config", validate_path, "experiment config (JSON)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return report_error(2, "usage", "", e.what());
  }

  if (*run) return do_run(run_path, out, threads, seed);
  return do_validate(validate_path);
}
