#include "patchepi/invasion.hpp"

#include <algorithm>
#include <limits>
#include <random>

#include "patchepi/error.hpp"

namespace patchepi {

namespace {

double invasion_radius(const ModelSpec& spec, const Vector& resident_susceptible, Strain invader) {
  const NextGeneration ng = next_gen_matrices(spec, invader);
  const Vector weight = spec.strain(invader).beta.cwiseProduct(resident_susceptible);
  const Matrix next = weight.asDiagonal() * ng.V.partialPivLu().inverse();
  return spectral_radius_nonneg(next.cwiseMax(0.0));
}

}  // namespace

double invasion_number_at(const ModelSpec& spec, double /*mass*/, const Equilibrium& resident_ee,
                          Strain invader) {
  if (resident_ee.kind != endemic_kind(other(invader))) {
    throw Error(ErrorCode::WrongEquilibrium,
                "invasion number needs the resident strain's single-strain equilibrium, got " +
                    std::string(to_string(resident_ee.kind)));
  }
  if (!(resident_ee.residual < kEquilibriumTolerance)) {
    throw Error(ErrorCode::WrongEquilibrium, "resident equilibrium residual above tolerance");
  }
  return invasion_radius(spec, resident_ee.state.S, invader);
}

double invasion_number_uniform(const ModelSpec& spec, double mass, Strain invader) {
  const Equilibrium resident = single_strain_ee_uniform(spec, mass, other(invader));
  const int k = spec.patches();
  const NextGeneration ng = next_gen_matrices(spec, invader);
  const Vector& beta = spec.strain(invader).beta;
  const Matrix weight =
      (mass / k) * ng.F - Matrix(beta.cwiseProduct(resident.state.infected(other(invader))).asDiagonal());
  const Matrix next = weight * ng.V.partialPivLu().inverse();
  return spectral_radius_nonneg(next.cwiseMax(0.0));
}

std::optional<std::array<double, 2>> invasion_numbers(const ModelSpec& spec, double mass,
                                                      std::uint64_t rng_seed) {
  if (!(r0_strain(spec, mass, Strain::One) > 1.0 && r0_strain(spec, mass, Strain::Two) > 1.0)) {
    return std::nullopt;
  }
  std::array<double, 2> out{};
  if (has_uniform_dispersal(spec)) {
    for (Strain s : kStrains) out[index(s)] = invasion_number_uniform(spec, mass, s);
    return out;
  }

  std::mt19937_64 rng(rng_seed);
  for (Strain invader : kStrains) {
    const Strain resident = other(invader);
    std::vector<Equilibrium> found;
    found.push_back(single_strain_ee(spec, mass, resident, std::nullopt, rng()));
    // A few extra starts from random interior points of the resident face.
    std::uniform_real_distribution<double> u(0.05, 1.0);
    const int k = spec.patches();
    for (int attempt = 0; attempt < 4; ++attempt) {
      State seed = State::zeros(k);
      for (int j = 0; j < k; ++j) {
        seed.S[j] = u(rng);
        seed.infected(resident)[j] = u(rng);
      }
      try {
        Equilibrium eq = single_strain_ee(spec, mass, resident, seed, rng());
        const bool duplicate = std::any_of(found.begin(), found.end(), [&](const Equilibrium& e) {
          return (e.state.flatten() - eq.state.flatten()).lpNorm<Eigen::Infinity>() < kDedupRadius;
        });
        if (!duplicate) found.push_back(std::move(eq));
      } catch (const Error&) {
      }
    }
    double best = std::numeric_limits<double>::infinity();
    for (const Equilibrium& eq : found) {
      best = std::min(best, invasion_number_at(spec, mass, eq, invader));
    }
    out[index(invader)] = best;
  }
  return out;
}

SpectralReport full_spectral_report(const ModelSpec& spec, double mass, std::uint64_t rng_seed) {
  SpectralReport rep = spectral_report(spec, mass);
  rep.invasion = invasion_numbers(spec, mass, rng_seed);
  return rep;
}

}  // namespace patchepi
