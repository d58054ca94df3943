// SPDX-License-Identifier: Apache-2.0
#include <CLI11.hpp>
#include <iostream>

#include "config.hpp"
#include "kcgen/util/error.hpp"
#include "kcgen/util/log.hpp"
#include "plots.hpp"
#include "stages.hpp"

using namespace kcgen;

int main(int argc, char** argv) {
  CLI::App app{"kcgen: LLM-generated knowledge components and knowledge-guided knowledge tracing"};
  app.require_subcommand(0, 1);

  std::optional<std::string> config_path;
  std::vector<std::string> overrides;
  std::optional<std::string> run_dir;
  bool print_config = false;
  bool verbose = false;
  bool quiet = false;
  app.add_option("-c,--config", config_path, "Config file (JSON with comments)");
  app.add_option("--set", overrides, "Override a config value: key.path=value (repeatable)");
  app.add_option("--run-dir", run_dir, "Run directory (overrides run.dir)");
  app.add_flag("--print-config", print_config, "Print the fully resolved config and exit");
  app.add_flag("-v,--verbose", verbose, "Debug logging");
  app.add_flag("-q,--quiet", quiet, "Warnings and errors only");

  std::vector<CLI::App*> stage_cmds;
  for (const auto& name : cli::stage_names()) {
    stage_cmds.push_back(app.add_subcommand(name, "Run the " + name + " stage"));
  }
  auto* plot = app.add_subcommand("plot-data", "Emit plot data files from stage artifacts");
  std::string plot_kind;
  plot->add_option("kind", plot_kind, "learning-curves, loss-curves or mastery-heatmap")
      ->required()
      ->check(CLI::IsMember({"learning-curves", "loss-curves", "mastery-heatmap"}));
  auto* synth = app.add_subcommand("synth", "Write a simulated course dataset");
  std::string synth_out = "data/synthetic";
  int synth_students = 40, synth_problems = 50;
  std::uint64_t synth_seed = 1;
  synth->add_option("-o,--out", synth_out, "Output directory")->capture_default_str();
  synth->add_option("--students", synth_students, "Number of students")->capture_default_str()->check(CLI::PositiveNumber);
  synth->add_option("--problems", synth_problems, "Number of problems")->capture_default_str()->check(CLI::PositiveNumber);
  synth->add_option("--seed", synth_seed, "Generator seed")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  log().set_level(verbose ? spdlog::level::debug : quiet ? spdlog::level::warn : spdlog::level::info);

  try {
    if (synth->parsed()) {
      cli::write_synthetic(synth_out, synth_students, synth_problems, synth_seed);
      return 0;
    }
    const auto settings = cli::load_settings(config_path ? std::optional<std::filesystem::path>(*config_path)
                                                         : std::nullopt,
                                             overrides,
                                             run_dir ? std::optional<std::filesystem::path>(*run_dir) : std::nullopt);
    if (print_config) {
      std::cout << settings.resolved.dump(2) << "\n";
      return 0;
    }
    if (plot->parsed()) {
      cli::emit_plot_data(settings, plot_kind);
      return 0;
    }
    for (std::size_t i = 0; i < stage_cmds.size(); ++i) {
      if (stage_cmds[i]->parsed()) {
        cli::run_stage(cli::stage_names()[i], settings);
        return 0;
      }
    }
    std::cout << app.help();
    return 2;
  } catch (const Error& e) {
    log().error("{}", e.what());
    return e.exit_code();
  } catch (const std::exception& e) {
    log().error("{}", e.what());
    return 1;
  }
}
