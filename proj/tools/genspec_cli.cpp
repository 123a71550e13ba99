#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "genspec/errors.hpp"
#include "genspec/experiments.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Co-occurrence spectra, pretraining objectives and generation bounds on the toy corpus"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed;
  auto* run = app.add_subcommand("run", "Run the experiment described by a JSON config");
  run->add_option("--config", config_path, "Path to the JSON config")->required();
  run->add_option("--out", out_dir, "Output root (overrides output_dir)");
  run->add_option("--seed", seed, "Seed (overrides seed)");

  auto* list = app.add_subcommand("list", "Print the experiment names");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (list->parsed()) {
    for (const auto& name : genspec::experiment_names()) std::cout << name << '\n';
    return 0;
  }

  try {
    genspec::ExperimentConfig config = genspec::load_config(config_path);
    if (out_dir) config.output_dir = *out_dir;
    if (seed) config.seed = *seed;
    const auto dir = genspec::run_to_directory(config);
    std::cout << (dir / "report.json").string() << '\n';
    return 0;
  } catch (const genspec::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return genspec::exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return genspec::exit_code_for(e);
  }
}
