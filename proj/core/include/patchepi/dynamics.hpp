#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "patchepi/model.hpp"
#include "patchepi/spectral.hpp"

namespace patchepi {

struct IntegrationOptions {
  double t_end = 2000.0;
  double rel_tol = 1e-8;
  double abs_tol = 1e-10;
  double max_step = 1.0;
  double sample_every = 1.0;       // time between stored samples
  double clamp_threshold = 1e-12;  // entries in (-clamp, 0) are set to 0
  double max_mass_error = 1e-8;    // relative drift that aborts the run
};

void validate(const IntegrationOptions& opts);

struct Trajectory {
  double mass = 0.0;
  std::vector<double> times;
  std::vector<State> states;
  std::vector<double> mass_error;  // |total_mass - N| / N per sample
  std::vector<double> lyapunov;    // lyapunov_value with the spec's r_min per strain
  /// ||I_l||_inf / min_j I_l,j per sample; NaN before t = 1 or when I_l == 0.
  std::array<std::vector<double>, 2> harnack_ratio;
  std::int64_t steps_accepted = 0;
  std::int64_t steps_rejected = 0;

  std::size_t size() const { return times.size(); }
  bool empty() const { return times.empty(); }
  double max_mass_error() const;
  /// Most negative entry over all samples (0 when none are negative).
  double min_entry() const;
};

/// Dormand-Prince 5(4) integration sampled every opts.sample_every time units
/// (plus t_end). Throws StepUnderflow or MassDrift.
Trajectory integrate(const ModelSpec& spec, const State& initial,
                     const IntegrationOptions& opts = {});

enum class Verdict { DiseaseExtinction, Strain1Excluded, Strain2Excluded, Coexistence, Undetermined };

std::string_view to_string(Verdict verdict);

struct WindowStats {
  // Indexed by compartment: 0 = S, 1 = I1, 2 = I2; extrema over patches and
  // samples in the window.
  std::array<double, 3> min{};
  std::array<double, 3> max{};
  double t_begin = 0.0;
};

struct Outcome {
  Verdict verdict = Verdict::Undetermined;
  WindowStats window;
};

inline constexpr double kDefaultExtinctFraction = 1e-6;
inline constexpr double kDefaultPersistFraction = 1e-3;
inline constexpr double kTerminalWindowFraction = 0.1;

/// Strain l is extinct if max_j I_l,j < eps_extinct N over the last 10% of
/// the horizon, persistent if min_j I_l,j > eps_persist N throughout it.
Outcome classify_outcome(const Trajectory& traj, double eps_extinct = kDefaultExtinctFraction,
                         double eps_persist = kDefaultPersistFraction);

/// 1/2 sum S_j^2 + r1_min sum I1_j + r2_min sum I2_j.
double lyapunov_value(const State& state, double r1_min, double r2_min);

/// Time derivative of lyapunov_value along the flow, valid when beta/gamma is
/// constant across patches for both strains:
///   -(dS/2) sum_ij L_ij (S_i - S_j)^2 - sum_l sum_j (S_j - r_l,min)^2 beta_l,j I_l,j.
/// Throws HypothesisViolated otherwise.
double lyapunov_dissipation(const ModelSpec& spec, const State& state);

struct HarnackReport {
  std::array<double, 2> c_tilde{};
  std::array<int, 2> checked{};
  std::array<int, 2> skipped{};
  std::array<int, 2> violations{};
  std::array<double, 2> worst_ratio{};

  int total_violations() const { return violations[0] + violations[1]; }
};

/// Checks ||I_l(t)||_inf <= c_tilde min_j I_l,j(t) for samples with t >= 1.
/// Samples whose ||I_l||_inf is at or below `floor` are skipped: they sit
/// under the integrator's resolution.
HarnackReport harnack_monitor(const Trajectory& traj, std::array<double, 2> c_tilde, double floor);
HarnackReport harnack_monitor(const Trajectory& traj, double c_tilde, double floor);

struct PersistenceReport {
  bool applicable = false;
  double observed_min = 0.0;  // min_j S_j over the terminal window
  double observed_max = 0.0;  // max_j S_j over the terminal window
  double lower_margin = 0.0;  // observed_min - (s_min - 0.01 N)
  double upper_margin = 0.0;  // (s_max + 0.01 N) - observed_max
  bool holds = true;
};

PersistenceReport persistence_check(const Trajectory& traj, const SusceptibleBounds& bounds,
                                    bool both_r0_above_one);

struct DispersalRates {
  double dS = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;

  auto operator<=>(const DispersalRates&) const = default;
};

ModelSpec with_dispersal(ModelSpec spec, const DispersalRates& rates);

struct SweepRow {
  DispersalRates rates;
  std::array<double, 2> r0{};
  std::optional<std::array<double, 2>> invasion;
  std::optional<Outcome> outcome;
  std::string error;  // nonempty when the row failed

  bool failed() const { return !error.empty(); }
};

/// Uniform grid: every row sets dS = d1 = d2 = d.
std::vector<DispersalRates> uniform_rates(std::span<const double> d_grid);

/// Runs each row independently from `initial`; a failing row is recorded,
/// not rethrown. Rows are sorted by (dS, d1, d2).
std::vector<SweepRow> sweep_dispersal(const ModelSpec& spec_template, const State& initial,
                                      std::span<const DispersalRates> rows,
                                      const IntegrationOptions& opts = {});

/// As above with dS = d1 = d2 = d per grid point and the equal-split
/// initial state S = I1 = I2 = N/(3k).
std::vector<SweepRow> sweep_dispersal(const ModelSpec& spec_template, double mass,
                                      std::span<const double> d_grid,
                                      const IntegrationOptions& opts = {});

}  // namespace patchepi
