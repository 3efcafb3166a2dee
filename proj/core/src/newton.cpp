#include "newton.hpp"

#include <cmath>

namespace patchepi::detail {

NewtonResult damped_newton(const ResidualFn& residual, const JacobianFn& jacobian, Vector x0,
                           const NewtonOptions& options) {
  const Eigen::Index n = x0.size();
  NewtonResult out;
  out.x = x0.cwiseMax(options.floor);
  Vector f(n), trial_f(n), trial(n);
  Matrix j(n, n);
  residual(out.x, f);
  double norm = f.lpNorm<Eigen::Infinity>();

  for (int it = 0; it < options.max_iterations && norm > options.target; ++it) {
    out.iterations = it + 1;
    jacobian(out.x, j);
    const Vector step = j.completeOrthogonalDecomposition().solve(-f);
    if (!step.allFinite()) break;

    bool improved = false;
    double alpha = 1.0;
    for (int h = 0; h <= options.max_halvings; ++h, alpha *= 0.5) {
      trial = (out.x + alpha * step).cwiseMax(options.floor);
      residual(trial, trial_f);
      const double trial_norm = trial_f.lpNorm<Eigen::Infinity>();
      if (std::isfinite(trial_norm) && trial_norm < norm) {
        out.x.swap(trial);
        f.swap(trial_f);
        norm = trial_norm;
        improved = true;
        break;
      }
    }
    if (!improved) break;
  }
  out.residual = norm;
  return out;
}

}  // namespace patchepi::detail
