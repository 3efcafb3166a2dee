#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "patchepi/dynamics.hpp"

namespace patchepi {

/// Compartments to draw in a plot.
struct SeriesSelection {
  bool S = true;
  bool I1 = true;
  bool I2 = true;

  static SeriesSelection all() { return {}; }
  static SeriesSelection only_i1() { return {false, true, false}; }
  static SeriesSelection only_i2() { return {false, false, true}; }
};

/// "%.12g".
std::string format_number(double v);

/// Header t,S_1..S_k,I1_1..I1_k,I2_1..I2_k,mass_error, one row per sample.
/// Throws Error(InvalidModel) for an empty trajectory.
std::string trajectory_csv(const Trajectory& traj);

/// Writes trajectory_csv(traj). An empty trajectory throws before any file is created.
/// Throws Error(Io) on write failure.
std::filesystem::path emit_trajectory_csv(const Trajectory& traj, const std::filesystem::path& path);

/// Standalone SVG line plot, one polyline per selected compartment and patch.
std::string trajectory_svg(const Trajectory& traj, const SeriesSelection& series,
                           std::string_view title = "");

std::filesystem::path emit_plot_svg(const Trajectory& traj, const std::filesystem::path& path,
                                    const SeriesSelection& series = SeriesSelection::all(),
                                    std::string_view title = "");

/// Writes `contents` to `path`, creating parent directories. Throws Error(Io).
void write_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace patchepi
