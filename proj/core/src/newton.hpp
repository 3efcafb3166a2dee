#pragma once

#include <functional>

#include "patchepi/types.hpp"

namespace patchepi::detail {

struct NewtonOptions {
  int max_iterations = 200;
  int max_halvings = 30;
  double target = 1e-13;     // stop once ||F||_inf falls below this
  double floor = 1e-14;      // every unknown is kept >= floor
};

struct NewtonResult {
  Vector x;
  double residual = 0.0;     // ||F(x)||_inf
  int iterations = 0;
};

using ResidualFn = std::function<void(const Vector& x, Vector& f)>;
using JacobianFn = std::function<void(const Vector& x, Matrix& j)>;

/// Damped Newton iteration with step halving and projection onto
/// {x >= floor}. The linear solve uses a complete orthogonal decomposition,
/// so rank-deficient Jacobians yield the minimum-norm step.
NewtonResult damped_newton(const ResidualFn& residual, const JacobianFn& jacobian, Vector x0,
                           const NewtonOptions& options = {});

}  // namespace patchepi::detail
