#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "patchepi/dynamics.hpp"
#include "patchepi/equilibria.hpp"
#include "patchepi/scenario.hpp"
#include "patchepi/spectral.hpp"

namespace patchepi {

enum class Command { Analyze, Simulate, Equilibria, Classify, Sweep, ReproduceAll };

std::string_view to_string(Command command);

/// Throws Error(InvalidModel) for unknown names.
Command parse_command(std::string_view name);

struct LyapunovSummary {
  bool applicable = false;
  int increases = 0;          // consecutive samples rising by more than kLyapunovSlack
  double max_increase = 0.0;  // largest rise between consecutive samples
};

inline constexpr double kLyapunovSlack = 1e-10;

LyapunovSummary lyapunov_summary(const ModelSpec& spec, const Trajectory& traj);

struct MonitorSummary {
  double max_mass_error = 0.0;
  double min_entry = 0.0;
  std::optional<LyapunovSummary> lyapunov;
  std::optional<HarnackReport> harnack;
  std::optional<PersistenceReport> persistence;
};

/// Harnack check for one trajectory: c_tilde per strain from that strain's
/// dispersal rate and m_inf = N beta_max + gamma_max, with samples below
/// 100 abs_tol skipped.
HarnackReport harnack_for(const ModelSpec& spec, const Trajectory& traj,
                          const IntegrationOptions& opts);

struct Thresholds {
  std::array<std::optional<double>, 2> critical_ds;
  std::array<std::string, 2> critical_ds_note;  // why critical_ds is absent
  std::array<double, 2> limit_invasion{};
};

struct ReproductionRow {
  std::string name;
  std::optional<Verdict> verdict;
  std::optional<Verdict> expected;
  std::string error;

  bool matches() const { return verdict && expected && *verdict == *expected; }
};

struct RunSummary {
  std::string scenario;
  std::string command;
  double mass = 0.0;
  std::optional<double> declared_N;
  std::vector<std::string> warnings;
  std::optional<SpectralReport> spectral;
  std::optional<Thresholds> thresholds;
  std::vector<Equilibrium> equilibria;
  std::optional<Outcome> outcome;
  std::optional<MonitorSummary> monitors;
  std::vector<SweepRow> sweep;
  std::vector<ReproductionRow> reproduction;
  std::vector<std::filesystem::path> files;

  /// True unless a reproduction row disagrees with its expected verdict.
  bool reproduction_ok() const;
};

struct RunOptions {
  std::filesystem::path out_dir = ".";
  bool write_files = true;
};

/// Executes the pipeline for `command`. Deterministic given the config
/// (including its seed). ReproduceAll ignores the model in `config` and runs
/// every built-in reproduction scenario with config.integration.
RunSummary run(const ScenarioConfig& config, Command command, const RunOptions& options = {});

RunSummary reproduce_all(const IntegrationOptions& integration, const RunOptions& options = {});

std::string summary_json(const RunSummary& summary);

/// One or more human-readable lines for standard output.
std::string summary_text(const RunSummary& summary);

}  // namespace patchepi
