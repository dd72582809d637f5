#pragma once
#include "dollard/expcli/config.hpp"
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace dollard::expcli {

//! One CSV row: `experiment, probe_id, param, value, tolerance, pass`.
//! Data rows leave tolerance and pass empty; check rows carry both.
struct Row {
  std::string probe_id;
  std::string param;
  double value = 0.0;
  std::optional<double> tolerance;
  std::optional<bool> pass;
};

struct ExperimentResult {
  std::vector<Row> checks;
  //! Report tables keyed by file stem (convergence, trace, ir, series).
  std::map<std::string, std::vector<Row>> tables;

  bool passed() const;
};

//! Runs the named experiment. Module errors propagate as exceptions.
ExperimentResult run_experiment(const ExperimentConfig &config, std::size_t workers);

//! `experiment,probe_id,param,value,tolerance,pass` plus one line per row.
std::string to_csv(const std::string &experiment, const std::vector<Row> &rows);

} // namespace dollard::expcli
