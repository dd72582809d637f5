#pragma once
#include "dollard/expcli/experiments.hpp"
#include <filesystem>
#include <string>
#include <vector>

namespace dollard::expcli {

enum ExitCode : int { exit_pass = 0, exit_assertion = 1, exit_config = 2, exit_abort = 3 };

struct RunManifest {
  std::string experiment;
  std::string digest;
  std::string tool_version;
  double wall_clock_seconds = 0.0;
  std::size_t steps = 0;
  double max_norm_drift = 0.0;
  std::size_t checks = 0;
  std::size_t failed_checks = 0;
  //! passed, failed, config_error, support_violation or error.
  std::string status;
  std::string error;
  std::vector<std::string> files;
  int exit_code = exit_pass;
};

const char *tool_version();

//! Runs the experiment and writes `<experiment>_<table>.csv` files plus
//! `<experiment>_manifest.json` into `out_dir`. A `<experiment>.partial`
//! marker exists while the run is in flight and is left behind on errors.
RunManifest run(const ExperimentConfig &config, const std::filesystem::path &out_dir,
                std::size_t workers, ExperimentResult *result = nullptr);

std::string manifest_json(const ExperimentConfig &config, const RunManifest &m);

} // namespace dollard::expcli
