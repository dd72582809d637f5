#pragma once
#include "dollard/dynamics.hpp"
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

//! Experiment configuration: flat `key = value` text with dotted sections.
//!
//!   experiment = dollard-vs-free
//!   grid.n = 8192
//!   probe.a.p0 = 2          # probes are keyed by id, ordered by id
//!   schedule.T = 64, 128, 256
//!
//! Lists are comma separated. `#` starts a comment. Unknown keys are errors.
namespace dollard::expcli {

struct ProbeSpec {
  std::string id;
  PacketSpec packet;
  bool operator==(const ProbeSpec &) const = default;
};

struct ExperimentConfig {
  std::string experiment;
  std::size_t grid_n = 8192;
  double box_length = 9800.0;
  double mass = 1.0;
  PotentialSpec potential;
  std::vector<ProbeSpec> probes;
  double min_momentum = 0.5;
  std::vector<double> horizons;   // schedule.T
  std::vector<double> epsilons;   // schedule.epsilon
  std::vector<double> increments; // schedule.s
  std::vector<double> times;      // schedule.t
  SwitchingSpec switching;
  StepperConfig stepper;
  std::string output_dir = "out";

  bool operator==(const ExperimentConfig &) const;
};

using KeyValues = std::map<std::string, std::string>;

//! Raw key/value pairs; ConfigError on malformed lines (with line number).
KeyValues parse_key_values(std::string_view text);
//! Applies "key=value"; ConfigError if the assignment is malformed.
void apply_override(KeyValues &kv, std::string_view assignment);
//! Typed configuration; ConfigError naming the offending field.
ExperimentConfig build_config(const KeyValues &kv);

ExperimentConfig parse_config(std::string_view text);
std::string read_text_file(const std::filesystem::path &path);

//! Canonical text: keys sorted, shortest round-trip decimals. Lossless:
//! parse_config(serialize(c)) == c.
std::string serialize(const ExperimentConfig &config);
KeyValues to_key_values(const ExperimentConfig &config);

//! Hex SHA-256 of the canonical serialisation; independent of key order and
//! formatting in the source file.
std::string config_digest(const ExperimentConfig &config);

//! Shortest decimal that parses back to the same double.
std::string format_double(double v);

struct Diagnostic {
  std::string field;
  std::string message;
};

//! Preflight checks without propagation: experiment name, grid, potential,
//! stability guard, packet support and momentum clearance, schedules,
//! transport reach of every horizon and the eps T switch-off coupling.
std::vector<Diagnostic> validate(const ExperimentConfig &config);

const std::vector<std::string> &experiment_names();

} // namespace dollard::expcli
