#pragma once

#include <cstdint>
#include <functional>
#include <limits>

#include "patchepi/types.hpp"

namespace patchepi::ode {

struct StepControl {
  double rel_tol = 1e-8;
  double abs_tol = 1e-10;
  double max_step = std::numeric_limits<double>::infinity();
};

/// Verdict of a step filter on a proposed state.
enum class StepAction { Accept, Modified, Reject };

using System = std::function<void(double t, const Vector& x, Vector& dx)>;

/// Inspects (and may edit) a proposed step end-state. Reject forces a retry
/// with half the step size.
using StepFilter = std::function<StepAction(Vector& x)>;

struct Stats {
  std::int64_t accepted = 0;
  std::int64_t rejected = 0;
  std::int64_t evaluations = 0;
};

/// Dormand-Prince 5(4) embedded pair with FSAL and an elementary step-size
/// controller. advance_to() lands exactly on the requested time.
class Dopri5 {
 public:
  Dopri5(System f, StepControl control);

  void reset(double t0, const Vector& x0);

  /// Throws Error(StepUnderflow) when the step size collapses.
  void advance_to(double t_target, const StepFilter& filter = {});

  double time() const { return t_; }
  const Vector& state() const { return x_; }
  const Stats& stats() const { return stats_; }

 private:
  double initial_step(double direction_span);
  void eval(double t, const Vector& x, Vector& dx);

  System f_;
  StepControl control_;
  double t_ = 0.0;
  double h_ = 0.0;
  Vector x_;
  Vector k1_, k2_, k3_, k4_, k5_, k6_, k7_;
  Vector stage_, next_, err_;
  Stats stats_;
};

}  // namespace patchepi::ode
