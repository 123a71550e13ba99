#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "genspec/generation.hpp"
#include "genspec/objectives.hpp"
#include "genspec/toy_model.hpp"
#include "genspec/twostream.hpp"

namespace genspec {

struct ExperimentConfig {
  std::string experiment;
  ToyParams toy;
  std::vector<ObjectiveSpec> objectives;  // empty: ar plus masked at every rho_m
  int rank = 0;                           // 0: use r
  std::vector<double> rho_m{0.5};
  TrainHparams hparams;
  bool hparams_given = false;  // factorize falls back to GdOptions defaults otherwise
  std::uint64_t seed = 0;
  std::string output_dir = "out";
  int trials = 3;
  GroupSpec group{1, 2};
  std::vector<int> t_grid;  // empty: {rank, rank + 2} or {1, 2} for dar windows
  double reg = 1e-8;
  std::size_t neighbors = 100;  // k of the connectivity estimate

  int effective_rank() const noexcept { return rank > 0 ? rank : toy.r; }
  /// objectives, or the default list when none were given.
  std::vector<ObjectiveSpec> resolved_objectives() const;
};

/// Validates and converts a JSON config. Unknown keys and invalid values throw
/// ConfigError naming the JSON path of the offending entry.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);

const std::vector<std::string>& experiment_names();

/// Runs the configured experiment and returns its report. Extra files (CSV
/// dumps) are written under `dir`.
nlohmann::json run_experiment(const ExperimentConfig& config, const std::filesystem::path& dir);

/// Writes report.json (two-space indent, trailing newline).
void write_report(const nlohmann::json& report, const std::filesystem::path& dir);

/// Writes spectrum.csv, perk.csv and connectivity.csv from a report. Files
/// whose section is missing are written with the header only and named in the
/// returned list.
std::vector<std::string> emit_plot_data(const nlohmann::json& report, const std::filesystem::path& dir);

/// Full pipeline used by the CLI: run into <output_dir>/<experiment>/, write
/// the report and plot data. Returns the experiment directory.
std::filesystem::path run_to_directory(const ExperimentConfig& config);

/// Process exit code for an exception escaping run_to_directory.
int exit_code_for(const std::exception& e) noexcept;

}  // namespace genspec
