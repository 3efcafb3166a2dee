// patchepi <command> [--config PATH | --scenario NAME] [--out DIR] [--t-end X] [--grid d1,d2,...]

#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "patchepi/error.hpp"
#include "patchepi/pipeline.hpp"
#include "patchepi/scenario.hpp"

namespace {

int fail(std::string_view code, const std::string& message, int status) {
  nlohmann::json err = {{"error", {{"code", code}, {"message", message}, {"exit_code", status}}}};
  std::cerr << err.dump() << '\n';
  return status;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-strain SIS epidemic on a patch network"};
  std::string command;
  std::string config_path;
  std::string scenario;
  std::string out_dir = ".";
  std::optional<double> t_end;
  std::vector<double> grid;

  std::string commands;
  for (const char* c : {"analyze", "simulate", "equilibria", "classify", "sweep", "reproduce-all"}) {
    commands += commands.empty() ? c : std::string("|") + c;
  }
  app.add_option("command", command, commands)->required();
  auto* cfg = app.add_option("--config", config_path, "scenario config JSON file");
  auto* scn = app.add_option("--scenario", scenario, "built-in scenario name (sim1a..sim5c, sim4, sim5)");
  cfg->excludes(scn);
  app.add_option("--out", out_dir, "output directory")->capture_default_str();
  app.add_option("--t-end", t_end, "integration horizon override");
  app.add_option("--grid", grid, "comma-separated uniform dispersal grid for sweep")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("Usage", e.what(), 2);
  }

  try {
    const patchepi::Command cmd = patchepi::parse_command(command);
    patchepi::ScenarioConfig config;
    if (!config_path.empty()) {
      config = patchepi::load_config(config_path);
    } else if (!scenario.empty()) {
      config = patchepi::builtin_scenario(scenario);
    } else if (cmd != patchepi::Command::ReproduceAll) {
      return fail("Usage", "one of --config or --scenario is required", 2);
    }
    if (t_end) config.integration.t_end = *t_end;
    if (!grid.empty()) {
      config.sweep_grid = grid;
      config.sweep_rows.clear();
    }
    if (cmd != patchepi::Command::ReproduceAll) {
      patchepi::finalize(config);
    } else {
      patchepi::validate(config.integration);
    }

    patchepi::RunOptions options;
    options.out_dir = out_dir;
    const patchepi::RunSummary summary = patchepi::run(config, cmd, options);
    std::cout << patchepi::summary_text(summary);
    if (!summary.reproduction_ok()) {
      return fail("ReproductionMismatch", "at least one scenario verdict differs from the expected one", 3);
    }
    return 0;
  } catch (const patchepi::Error& e) {
    return fail(patchepi::to_string(e.code()), e.what(), patchepi::exit_code(e.code()));
  } catch (const std::exception& e) {
    return fail("Internal", e.what(), 3);
  }
}
