#include "dollard/expcli/runner.hpp"
#include "dollard/dynamics.hpp"
#include "dollard/errors.hpp"
#include <chrono>
#include <fstream>
#include <nlohmann/json.hpp>

namespace dollard::expcli {

const char *tool_version() { return DOLLARD_VERSION; }

namespace {

void write_file(const std::filesystem::path &path, const std::string &text) {
  std::ofstream f(path, std::ios::binary);
  f << text;
  if (!f)
    throw std::runtime_error("cannot write " + path.string());
}

} // namespace

std::string manifest_json(const ExperimentConfig &config, const RunManifest &m) {
  nlohmann::ordered_json j;
  j["experiment"] = m.experiment;
  j["tool_version"] = m.tool_version;
  j["config_digest"] = m.digest;
  nlohmann::ordered_json echo = nlohmann::ordered_json::object();
  for (const auto &[k, v] : to_key_values(config))
    echo[k] = v;
  j["config"] = echo;
  j["status"] = m.status;
  j["exit_code"] = m.exit_code;
  if (!m.error.empty())
    j["error"] = m.error;
  j["wall_clock_seconds"] = m.wall_clock_seconds;
  j["steps"] = m.steps;
  j["max_norm_drift"] = m.max_norm_drift;
  j["checks"] = m.checks;
  j["failed_checks"] = m.failed_checks;
  j["files"] = m.files;
  return j.dump(2) + "\n";
}

RunManifest run(const ExperimentConfig &config, const std::filesystem::path &out_dir,
                std::size_t workers, ExperimentResult *result_out) {
  RunManifest m;
  m.experiment = config.experiment;
  m.digest = config_digest(config);
  m.tool_version = tool_version();

  std::filesystem::create_directories(out_dir);
  const auto marker = out_dir / (config.experiment + ".partial");
  write_file(marker, m.digest + "\n");

  reset_global_propagation_stats();
  const auto start = std::chrono::steady_clock::now();
  ExperimentResult result;
  try {
    result = run_experiment(config, workers);
    m.status = result.passed() ? "passed" : "failed";
    m.exit_code = result.passed() ? exit_pass : exit_assertion;
  } catch (const ConfigError &e) {
    m.status = "config_error";
    m.error = e.what();
    m.exit_code = exit_config;
  } catch (const SupportViolation &e) {
    m.status = "support_violation";
    m.error = e.what();
    m.exit_code = exit_abort;
  } catch (const std::exception &e) {
    m.status = "error";
    m.error = e.what();
    m.exit_code = exit_abort;
  }
  m.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const auto stats = global_propagation_stats();
  m.steps = stats.steps;
  m.max_norm_drift = stats.max_norm_drift;

  for (const auto &r : result.checks) {
    if (!r.pass)
      continue;
    ++m.checks;
    if (!*r.pass)
      ++m.failed_checks;
  }

  auto emit = [&](const std::string &stem, const std::vector<Row> &rows) {
    const auto name = config.experiment + "_" + stem + ".csv";
    write_file(out_dir / name, to_csv(config.experiment, rows));
    m.files.push_back(name);
  };
  if (m.status == "passed" || m.status == "failed") {
    emit("checks", result.checks);
    for (const auto &[stem, rows] : result.tables)
      emit(stem, rows);
  }
  const auto manifest = config.experiment + "_manifest.json";
  m.files.push_back(manifest);
  write_file(out_dir / manifest, manifest_json(config, m));
  if (m.status == "passed" || m.status == "failed")
    std::filesystem::remove(marker);
  if (result_out)
    *result_out = std::move(result);
  return m;
}

} // namespace dollard::expcli
