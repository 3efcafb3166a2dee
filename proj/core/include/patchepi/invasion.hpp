#pragma once

// Invasion numbers: growth of a rare strain at the other strain's endemic
// equilibrium, rho(diag(beta_l o S*) V_l^-1).

#include <array>
#include <cstdint>
#include <optional>

#include "patchepi/equilibria.hpp"
#include "patchepi/spectral.hpp"

namespace patchepi {

/// Invasion number of `invader` at a single-strain equilibrium of the other
/// strain. Throws WrongEquilibrium for any other kind of equilibrium.
double invasion_number_at(const ModelSpec& spec, double mass, const Equilibrium& resident_ee,
                          Strain invader);

/// Invasion number under uniform dispersal, using the unique logistic
/// equilibrium of the resident strain.
double invasion_number_uniform(const ModelSpec& spec, double mass, Strain invader);

/// Both invasion numbers when min(R0_1, R0_2) > 1, otherwise nullopt.
/// Under uniform dispersal the resident equilibrium is unique; otherwise the
/// minimum is taken over equilibria found by multi-start Newton, which is an
/// upper bound on the true minimum.
std::optional<std::array<double, 2>> invasion_numbers(const ModelSpec& spec, double mass,
                                                      std::uint64_t rng_seed = 0);

/// spectral_report() plus invasion_numbers().
SpectralReport full_spectral_report(const ModelSpec& spec, double mass,
                                    std::uint64_t rng_seed = 0);

}  // namespace patchepi
