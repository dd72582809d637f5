#include "dollard/errors.hpp"
#include "dollard/expcli/runner.hpp"
#include <CLI11.hpp>
#include <cstdlib>
#include <iostream>
#include <thread>

using namespace dollard;
using namespace dollard::expcli;

namespace {

std::size_t default_workers() {
  if (const char *env = std::getenv("DOLLARD_WORKERS")) {
    char *end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0)
      return static_cast<std::size_t>(v);
    std::cerr << "ignoring DOLLARD_WORKERS=" << env << "\n";
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

ExperimentConfig load(const std::string &path, const std::vector<std::string> &overrides) {
  auto kv = parse_key_values(read_text_file(path));
  for (const auto &o : overrides)
    apply_override(kv, o);
  return build_config(kv);
}

int print_diagnostics(const std::vector<Diagnostic> &diags) {
  for (const auto &d : diags)
    std::cerr << d.field << ": " << d.message << "\n";
  return diags.empty() ? exit_pass : exit_config;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Long-range scattering experiments"};
  app.set_version_flag("--version", std::string(tool_version()));
  app.require_subcommand(1);

  std::string config_path, out_dir;
  std::size_t workers = default_workers();
  std::vector<std::string> overrides;

  auto *run_cmd = app.add_subcommand("run", "run an experiment config");
  run_cmd->add_option("config", config_path, "config file")->required()->check(CLI::ExistingFile);
  run_cmd->add_option("--workers", workers, "worker threads (default: $DOLLARD_WORKERS or cores)")
      ->check(CLI::PositiveNumber);
  run_cmd->add_option("--out", out_dir, "output directory (overrides output.dir)");
  run_cmd->add_option("--override", overrides, "key=value, repeatable")->allow_extra_args(false);

  auto *val_cmd = app.add_subcommand("validate", "check a config without running it");
  val_cmd->add_option("config", config_path, "config file")->required()->check(CLI::ExistingFile);
  val_cmd->add_option("--override", overrides, "key=value, repeatable")->allow_extra_args(false);

  app.add_subcommand("list-experiments", "print the experiment catalogue");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : exit_config;
  }

  if (app.got_subcommand("list-experiments")) {
    for (const auto &name : experiment_names())
      std::cout << name << "\n";
    return exit_pass;
  }

  ExperimentConfig config;
  try {
    config = load(config_path, overrides);
  } catch (const ConfigError &e) {
    std::cerr << e.what() << "\n";
    return exit_config;
  } catch (const std::exception &e) {
    std::cerr << e.what() << "\n";
    return exit_config;
  }

  if (*val_cmd) {
    const int code = print_diagnostics(validate(config));
    if (code == exit_pass)
      std::cout << "ok\n";
    return code;
  }

  if (print_diagnostics(validate(config)) != exit_pass)
    return exit_config;
  const std::filesystem::path out = out_dir.empty() ? config.output_dir : out_dir;
  RunManifest m;
  try {
    m = run(config, out, workers);
  } catch (const std::exception &e) {
    std::cerr << e.what() << "\n";
    return exit_abort;
  }
  std::cout << config.experiment << ": " << m.status << " (" << m.checks - m.failed_checks
            << "/" << m.checks << " checks, " << m.wall_clock_seconds << " s)\n";
  if (!m.error.empty())
    std::cerr << m.error << "\n";
  for (const auto &f : m.files)
    std::cout << "  " << (out / f).string() << "\n";
  return m.exit_code;
}
