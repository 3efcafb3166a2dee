#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "patchepi/model.hpp"

namespace patchepi {

enum class EquilibriumKind { DiseaseFree, Strain1, Strain2, Coexistence };

enum class Stability { LinearlyStable, Unstable, Marginal, NotAssessed };

std::string_view to_string(EquilibriumKind kind);
std::string_view to_string(Stability stability);

EquilibriumKind endemic_kind(Strain s);

struct Equilibrium {
  State state;
  EquilibriumKind kind = EquilibriumKind::DiseaseFree;
  double residual = 0.0;  // max(||rhs||_inf, |mass - N|)
  Stability stability = Stability::NotAssessed;
  double leading_eigenvalue = std::numeric_limits<double>::quiet_NaN();
};

/// Returned equilibria satisfy residual < kEquilibriumTolerance.
inline constexpr double kEquilibriumTolerance = 1e-10;

/// Two equilibria closer than this in sup-norm are the same point.
inline constexpr double kDedupRadius = 1e-6;

/// Real parts within +-kMarginalBand of zero are classified Marginal.
inline constexpr double kMarginalBand = 1e-8;

double equilibrium_residual(const ModelSpec& spec, const State& state, double mass);

Equilibrium dfe(const ModelSpec& spec, double mass);

/// Strain-s endemic equilibrium under uniform dispersal (dS == d1 == d2),
/// from the multi-patch logistic equation
///   0 = d L I + (beta o (N/k - I) - gamma) o I.
/// Throws HypothesisViolated without uniform dispersal and
/// NoPositiveSolution when R0_s(N) <= 1.
Equilibrium single_strain_ee_uniform(const ModelSpec& spec, double mass, Strain s);

/// Strain-s endemic equilibrium for general dispersal rates: Newton on the
/// (S, I_s) subsystem with the last susceptible equation replaced by the
/// mass constraint, multi-start, then a time-marching fallback.
Equilibrium single_strain_ee(const ModelSpec& spec, double mass, Strain s,
                             const std::optional<State>& seed = std::nullopt,
                             std::uint64_t rng_seed = 0);

/// Newton roots of the full system with both strains strictly positive,
/// deduplicated. An empty result means no root was found from these seeds.
std::vector<Equilibrium> coexistence_search(const ModelSpec& spec, double mass,
                                            std::span<const State> seeds,
                                            std::uint64_t rng_seed = 0);

/// Analytic 3k x 3k Jacobian of the vector field in the [S; I1; I2] layout.
Matrix jacobian(const ModelSpec& spec, const State& state);

/// Linear stability on the mass-conserving hyperplane sum(x) = 0.
Equilibrium stability(const ModelSpec& spec, Equilibrium eq);

/// Eigenvalues of the Jacobian restricted to the mass-conserving hyperplane.
Eigen::VectorXcd projected_spectrum(const ModelSpec& spec, const State& state);

}  // namespace patchepi
