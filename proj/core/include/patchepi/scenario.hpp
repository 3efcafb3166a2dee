#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "patchepi/dynamics.hpp"
#include "patchepi/model.hpp"

namespace patchepi {

struct Analyses {
  bool spectral = true;
  bool equilibria = true;
  bool stability = true;
  bool lyapunov = true;
  bool harnack = true;
  bool persistence = true;
  bool sweep = false;

  auto operator<=>(const Analyses&) const = default;
};

struct ScenarioConfig {
  std::string name;
  ModelSpec model;
  State initial;
  std::optional<double> declared_N;
  IntegrationOptions integration;
  Analyses analyses;
  std::vector<double> sweep_grid;         // uniform rows dS = d1 = d2 = d
  std::vector<DispersalRates> sweep_rows;  // explicit (dS, d1, d2) rows
  std::optional<Verdict> expected_verdict;
  std::uint64_t seed = 0;
  std::vector<std::string> warnings;

  /// Total mass of the initial data; this is the N every analysis uses.
  double mass() const { return total_mass(initial); }

  /// sweep_rows followed by the rows generated from sweep_grid.
  std::vector<DispersalRates> all_sweep_rows() const;
};

/// Parses and validates a JSON document. Throws Error(Parse) with a line or
/// field diagnostic, or the patch-model validation error.
ScenarioConfig parse_config(std::string_view text);

/// Throws Error(Io) when the file cannot be read.
ScenarioConfig load_config(const std::filesystem::path& path);

std::string to_json(const ScenarioConfig& config);

/// Validation shared by the loader and the built-ins: model, dimensions,
/// integration options, and the declared-N check (which only warns).
void finalize(ScenarioConfig& config);

std::vector<std::string> builtin_names();

/// Throws Error(InvalidModel) for unknown names.
ScenarioConfig builtin_scenario(std::string_view name);

/// The fifteen single runs sim1a ... sim5c, in order.
std::vector<std::string> reproduction_runs();

}  // namespace patchepi
