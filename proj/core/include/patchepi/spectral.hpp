#pragma once

// Reproduction numbers, risk sets and related spectral quantities.
//
// For strain l the next-generation pair is F = diag(beta_l) and
// V = diag(gamma_l) - d_l L. The basic reproduction number at total mass N
// is R0_l(N) = (N/k) rho(F V^-1), and R0(N) is the larger of the two.

#include <array>
#include <optional>
#include <vector>

#include "patchepi/model.hpp"
#include "patchepi/types.hpp"

namespace patchepi {

struct LaplacianSpectrum {
  Vector eigenvalues;  // sorted descending; eigenvalues[0] == 0
  Matrix eigenvectors;  // orthonormal, columns match eigenvalues
  double gap = 0.0;  // -eigenvalues[1], the slowest decay rate

  /// min over j >= 2 of the eigenvalues (the most negative one).
  double most_negative() const { return eigenvalues[eigenvalues.size() - 1]; }
};

LaplacianSpectrum laplacian_spectrum(const Laplacian& lap);

struct NextGeneration {
  Matrix F;
  Matrix V;
};

NextGeneration next_gen_matrices(const ModelSpec& spec, Strain s);
NextGeneration next_gen_matrices(const ModelSpec& spec, const Laplacian& lap, Strain s);

/// Perron root of an entrywise-nonnegative square matrix by power iteration
/// from the all-ones vector.
double spectral_radius_nonneg(const Matrix& a);

/// Largest real part of the spectrum.
double spectral_bound(const Matrix& a);

double r0_strain(const ModelSpec& spec, double mass, Strain s);
double r0(const ModelSpec& spec, double mass);

/// 2 x k matrix of (N/k) beta_{l,j} / gamma_{l,j}.
Matrix local_reproduction(const ModelSpec& spec, double mass);

/// |R_{1,j} - R_{2,j}| at or below this puts patch j in sigma0.
inline constexpr double kTieTolerance = 1e-12;

/// Patch index sets (0-based). sigma compares the mass-free ratios
/// beta/gamma between strains; high/low compare (N/k) beta/gamma with 1.
struct RiskSets {
  std::vector<int> sigma1;
  std::vector<int> sigma2;
  std::vector<int> sigma0;
  std::array<std::vector<int>, 2> high;
  std::array<std::vector<int>, 2> low;
};

RiskSets risk_sets(const ModelSpec& spec, double mass);

/// Small-dispersal limit of the invasion number of `invader`:
/// max_j (beta/gamma)_{invader,j} * min(N/k, (gamma/beta)_{resident,j}).
double limit_invasion(const ModelSpec& spec, double mass, Strain invader);

/// Susceptible dispersal rate above which strain `s` dies out when
/// R0_s(N) < 1. Throws ThresholdUndefined when R0_s(N) >= 1 and
/// ThresholdOverflow when the margin is below numerical resolution.
double critical_ds(const ModelSpec& spec, double mass, Strain s);

/// Largest eps with spectral_bound(d_s L + diag((N+eps)/k beta_s - gamma_s)) < 0,
/// located by bisection to relative width 1e-6.
double extinction_margin(const ModelSpec& spec, double mass, Strain s);

/// Harnack-type constant c such that ||U(t)||_inf <= c min_j U_j(t) for t >= 1
/// along nonnegative solutions of U' = d L U + M(t) o U with ||M||_inf <= m_inf.
double harnack_constant(double dispersal, double m_inf, const Laplacian& lap);

/// m_inf = N beta_max + gamma_max, the bound used with harnack_constant.
double harnack_growth_bound(const ModelSpec& spec, double mass);

struct SusceptibleBounds {
  double min = 0.0;
  double max = 0.0;
};

/// Range of gamma/beta over both strains and all patches.
SusceptibleBounds theoretical_s_bounds(const ModelSpec& spec);

/// gamma/beta per patch for one strain.
Vector susceptible_threshold(const ModelSpec& spec, Strain s);

/// True when beta/gamma is the same on every patch (to 1e-12 relative).
bool has_constant_local_reproduction(const ModelSpec& spec, Strain s);

/// True when dS == d1 == d2 (to 1e-12 relative).
bool has_uniform_dispersal(const ModelSpec& spec);

struct SpectralReport {
  std::array<double, 2> r0_per_strain{};
  double r0 = 0.0;
  std::array<double, 2> lambda_star_per_strain{};  // spectral bound of (N/k)F - V
  Matrix local_matrix;
  RiskSets risk;
  LaplacianSpectrum laplacian;
  std::optional<std::array<double, 2>> invasion;
};

/// Everything except the invasion numbers, which need equilibria; see
/// invasion.hpp for the full report.
SpectralReport spectral_report(const ModelSpec& spec, double mass);

}  // namespace patchepi
